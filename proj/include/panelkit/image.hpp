#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <vector>

#include "panelkit/errors.hpp"

namespace panelkit {

struct PointI {
    int x = 0;
    int y = 0;
    friend bool operator==(const PointI&, const PointI&) = default;
};

// Single-channel 8-bit raster, row-major, origin top-left, y down.
struct ImageU8 {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> px;

    ImageU8() = default;
    ImageU8(int w, int h, uint8_t fill_value = 0)
        : width(w), height(h), px(static_cast<size_t>(w) * h, fill_value) {}

    uint8_t& at(int x, int y) { return px[static_cast<size_t>(y) * width + x]; }
    uint8_t at(int x, int y) const { return px[static_cast<size_t>(y) * width + x]; }
    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
    size_t size() const { return px.size(); }

    friend bool operator==(const ImageU8&, const ImageU8&) = default;
};

// Interleaved RGB raster for overlays and figures.
struct ImageRGB {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> px; // 3 * width * height

    ImageRGB() = default;
    ImageRGB(int w, int h, uint8_t r = 255, uint8_t g = 255, uint8_t b = 255)
        : width(w), height(h), px(static_cast<size_t>(w) * h * 3) {
        for (size_t i = 0; i < px.size(); i += 3) {
            px[i] = r;
            px[i + 1] = g;
            px[i + 2] = b;
        }
    }

    uint8_t* at(int x, int y) { return &px[(static_cast<size_t>(y) * width + x) * 3]; }
    const uint8_t* at(int x, int y) const { return &px[(static_cast<size_t>(y) * width + x) * 3]; }

    void set(int x, int y, uint8_t r, uint8_t g, uint8_t b) {
        if (x < 0 || x >= width || y < 0 || y >= height) return;
        uint8_t* p = at(x, y);
        p[0] = r;
        p[1] = g;
        p[2] = b;
    }
};

// Fills [x0, x1) x [y0, y1), clipped to the canvas.
inline void fill_rect(ImageU8& img, int x0, int y0, int x1, int y1, uint8_t value) {
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, img.width);
    y1 = std::min(y1, img.height);
    for (int y = y0; y < y1; ++y) {
        std::fill(img.px.begin() + static_cast<size_t>(y) * img.width + x0,
                  img.px.begin() + static_cast<size_t>(y) * img.width + x1, value);
    }
}

namespace detail {

// Square brush covering [c - (w-1)/2, c + w/2] per axis; width 1 stamps the
// pixel itself, odd widths are centered.
inline void stamp(ImageU8& img, int x, int y, int width, uint8_t value) {
    const int lo = -(width - 1) / 2;
    const int hi = width / 2;
    for (int dy = lo; dy <= hi; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= img.height) continue;
        for (int dx = lo; dx <= hi; ++dx) {
            const int xx = x + dx;
            if (xx < 0 || xx >= img.width) continue;
            img.at(xx, yy) = value;
        }
    }
}

} // namespace detail

// Bresenham segment between pixel coordinates, endpoints included, dilated to
// stroke_width with a square brush and clipped to the canvas.
inline void draw_segment(ImageU8& img, PointI a, PointI b, uint8_t value, int stroke_width = 1) {
    int x0 = a.x, y0 = a.y, x1 = b.x, y1 = b.y;
    const int dx = std::abs(x1 - x0);
    const int dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1;
    const int sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
        detail::stamp(img, x0, y0, stroke_width, value);
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

inline ImageU8 flip_horizontal(const ImageU8& img) {
    ImageU8 out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) out.at(x, y) = img.at(img.width - 1 - x, y);
    return out;
}

// Bilinear resample to out_w x out_h, float output in [0, 1].
inline std::vector<float> resize_bilinear(const ImageU8& img, int out_w, int out_h) {
    std::vector<float> out(static_cast<size_t>(out_w) * out_h);
    const float sx = static_cast<float>(img.width) / out_w;
    const float sy = static_cast<float>(img.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        const float fy = (y + 0.5f) * sy - 0.5f;
        const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, img.height - 1);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const float wy = std::clamp(fy - y0, 0.0f, 1.0f);
        for (int x = 0; x < out_w; ++x) {
            const float fx = (x + 0.5f) * sx - 0.5f;
            const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, img.width - 1);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const float wx = std::clamp(fx - x0, 0.0f, 1.0f);
            const float top = img.at(x0, y0) * (1.0f - wx) + img.at(x1, y0) * wx;
            const float bot = img.at(x0, y1) * (1.0f - wx) + img.at(x1, y1) * wx;
            out[static_cast<size_t>(y) * out_w + x] = (top * (1.0f - wy) + bot * wy) / 255.0f;
        }
    }
    return out;
}

// Upsamples an h x w float grid to out_w x out_h (bilinear, values copied
// through unchanged).
inline std::vector<float> upsample_bilinear(const std::vector<float>& grid, int w, int h,
                                            int out_w, int out_h) {
    std::vector<float> out(static_cast<size_t>(out_w) * out_h);
    const float sx = static_cast<float>(w) / out_w;
    const float sy = static_cast<float>(h) / out_h;
    for (int y = 0; y < out_h; ++y) {
        const float fy = (y + 0.5f) * sy - 0.5f;
        const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, h - 1);
        const int y1 = std::min(y0 + 1, h - 1);
        const float wy = std::clamp(fy - y0, 0.0f, 1.0f);
        for (int x = 0; x < out_w; ++x) {
            const float fx = (x + 0.5f) * sx - 0.5f;
            const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, w - 1);
            const int x1 = std::min(x0 + 1, w - 1);
            const float wx = std::clamp(fx - x0, 0.0f, 1.0f);
            const float top = grid[static_cast<size_t>(y0) * w + x0] * (1.0f - wx) +
                              grid[static_cast<size_t>(y0) * w + x1] * wx;
            const float bot = grid[static_cast<size_t>(y1) * w + x0] * (1.0f - wx) +
                              grid[static_cast<size_t>(y1) * w + x1] * wx;
            out[static_cast<size_t>(y) * out_w + x] = top * (1.0f - wy) + bot * wy;
        }
    }
    return out;
}

// Binary Chebyshev dilation by radius r (separable running-window max).
inline std::vector<uint8_t> dilate_square(const std::vector<uint8_t>& mask, int w, int h, int r) {
    std::vector<uint8_t> tmp(mask.size(), 0), out(mask.size(), 0);
    for (int y = 0; y < h; ++y) {
        const uint8_t* row = &mask[static_cast<size_t>(y) * w];
        uint8_t* trow = &tmp[static_cast<size_t>(y) * w];
        for (int x = 0; x < w; ++x) {
            const int lo = std::max(0, x - r), hi = std::min(w - 1, x + r);
            uint8_t m = 0;
            for (int i = lo; i <= hi && !m; ++i) m = row[i];
            trow[x] = m;
        }
    }
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) {
            const int lo = std::max(0, y - r), hi = std::min(h - 1, y + r);
            uint8_t m = 0;
            for (int i = lo; i <= hi && !m; ++i) m = tmp[static_cast<size_t>(i) * w + x];
            out[static_cast<size_t>(y) * w + x] = m;
        }
    }
    return out;
}

} // namespace panelkit
