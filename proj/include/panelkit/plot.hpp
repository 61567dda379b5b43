#pragma once

// Training-curve figures rendered without external plotting dependencies:
// Bresenham lines, a 5x7 bitmap font, and mean +/- std aggregation across
// folds. Curves are truncated at epoch 50 by default.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "panelkit/classifier.hpp"
#include "panelkit/image.hpp"

namespace panelkit {

struct Rgb {
    uint8_t r = 0, g = 0, b = 0;
};

namespace plotdetail {

inline void put(ImageRGB& img, int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
    const size_t i = (static_cast<size_t>(y) * img.width + x) * 3;
    img.px[i] = c.r;
    img.px[i + 1] = c.g;
    img.px[i + 2] = c.b;
}

inline void line(ImageRGB& img, int x0, int y0, int x1, int y1, Rgb c) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
        put(img, x0, y0, c);
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

// 5x7 glyphs, one byte per column, bit 0 = top row. Lowercase maps to
// uppercase; unknown characters render as spaces.
inline const uint8_t* glyph(char ch) {
    static const std::map<char, std::array<uint8_t, 5>> font = {
        {' ', {0x00, 0x00, 0x00, 0x00, 0x00}}, {'.', {0x00, 0x60, 0x60, 0x00, 0x00}},
        {'-', {0x08, 0x08, 0x08, 0x08, 0x08}}, {'+', {0x08, 0x08, 0x3E, 0x08, 0x08}},
        {'/', {0x20, 0x10, 0x08, 0x04, 0x02}}, {':', {0x00, 0x36, 0x36, 0x00, 0x00}},
        {'(', {0x00, 0x1C, 0x22, 0x41, 0x00}}, {')', {0x00, 0x41, 0x22, 0x1C, 0x00}},
        {'%', {0x23, 0x13, 0x08, 0x64, 0x62}}, {'=', {0x14, 0x14, 0x14, 0x14, 0x14}},
        {'0', {0x3E, 0x51, 0x49, 0x45, 0x3E}}, {'1', {0x00, 0x42, 0x7F, 0x40, 0x00}},
        {'2', {0x42, 0x61, 0x51, 0x49, 0x46}}, {'3', {0x21, 0x41, 0x45, 0x4B, 0x31}},
        {'4', {0x18, 0x14, 0x12, 0x7F, 0x10}}, {'5', {0x27, 0x45, 0x45, 0x45, 0x39}},
        {'6', {0x3C, 0x4A, 0x49, 0x49, 0x30}}, {'7', {0x01, 0x71, 0x09, 0x05, 0x03}},
        {'8', {0x36, 0x49, 0x49, 0x49, 0x36}}, {'9', {0x06, 0x49, 0x49, 0x29, 0x1E}},
        {'A', {0x7E, 0x11, 0x11, 0x11, 0x7E}}, {'B', {0x7F, 0x49, 0x49, 0x49, 0x36}},
        {'C', {0x3E, 0x41, 0x41, 0x41, 0x22}}, {'D', {0x7F, 0x41, 0x41, 0x22, 0x1C}},
        {'E', {0x7F, 0x49, 0x49, 0x49, 0x41}}, {'F', {0x7F, 0x09, 0x09, 0x09, 0x01}},
        {'G', {0x3E, 0x41, 0x49, 0x49, 0x7A}}, {'H', {0x7F, 0x08, 0x08, 0x08, 0x7F}},
        {'I', {0x00, 0x41, 0x7F, 0x41, 0x00}}, {'J', {0x20, 0x40, 0x41, 0x3F, 0x01}},
        {'K', {0x7F, 0x08, 0x14, 0x22, 0x41}}, {'L', {0x7F, 0x40, 0x40, 0x40, 0x40}},
        {'M', {0x7F, 0x02, 0x0C, 0x02, 0x7F}}, {'N', {0x7F, 0x04, 0x08, 0x10, 0x7F}},
        {'O', {0x3E, 0x41, 0x41, 0x41, 0x3E}}, {'P', {0x7F, 0x09, 0x09, 0x09, 0x06}},
        {'Q', {0x3E, 0x41, 0x51, 0x21, 0x5E}}, {'R', {0x7F, 0x09, 0x19, 0x29, 0x46}},
        {'S', {0x46, 0x49, 0x49, 0x49, 0x31}}, {'T', {0x01, 0x01, 0x7F, 0x01, 0x01}},
        {'U', {0x3F, 0x40, 0x40, 0x40, 0x3F}}, {'V', {0x1F, 0x20, 0x40, 0x20, 0x1F}},
        {'W', {0x3F, 0x40, 0x38, 0x40, 0x3F}}, {'X', {0x63, 0x14, 0x08, 0x14, 0x63}},
        {'Y', {0x07, 0x08, 0x70, 0x08, 0x07}}, {'Z', {0x61, 0x51, 0x49, 0x45, 0x43}}};
    const char up = (ch >= 'a' && ch <= 'z') ? static_cast<char>(ch - 'a' + 'A') : ch;
    const auto it = font.find(up);
    return it == font.end() ? font.at(' ').data() : it->second.data();
}

inline void text(ImageRGB& img, int x, int y, const std::string& s, Rgb c) {
    for (char ch : s) {
        const uint8_t* g = glyph(ch);
        for (int col = 0; col < 5; ++col)
            for (int row = 0; row < 7; ++row)
                if (g[col] & (1u << row)) put(img, x + col, y + row, c);
        x += 6;
    }
}

} // namespace plotdetail

struct CurveStats {
    int epoch = 0;
    double train_mean = 0.0, train_std = 0.0;
    double val_mean = 0.0, val_std = 0.0;
};

// Mean and population std across folds at every epoch every fold recorded.
inline std::vector<CurveStats> aggregate_curves(const std::vector<FoldModel>& models,
                                                int max_epoch = 50) {
    if (models.empty()) throw ConfigError("curve aggregation needs at least one fold");
    std::map<int, std::vector<std::pair<float, float>>> by_epoch;
    for (const auto& m : models)
        for (const auto& pt : m.curve)
            if (pt.epoch <= max_epoch)
                by_epoch[pt.epoch].emplace_back(pt.train_accuracy, pt.val_accuracy);
    std::vector<CurveStats> out;
    for (const auto& [epoch, values] : by_epoch) {
        if (values.size() != models.size()) continue; // cadence mismatch: skip
        CurveStats s;
        s.epoch = epoch;
        for (const auto& [t, v] : values) {
            s.train_mean += t;
            s.val_mean += v;
        }
        s.train_mean /= static_cast<double>(values.size());
        s.val_mean /= static_cast<double>(values.size());
        for (const auto& [t, v] : values) {
            s.train_std += (t - s.train_mean) * (t - s.train_mean);
            s.val_std += (v - s.val_mean) * (v - s.val_mean);
        }
        s.train_std = std::sqrt(s.train_std / static_cast<double>(values.size()));
        s.val_std = std::sqrt(s.val_std / static_cast<double>(values.size()));
        out.push_back(s);
    }
    return out;
}

// Accuracy-vs-epoch figure: solid mean lines with +/- std error bars.
inline ImageRGB render_curve_figure(const std::vector<CurveStats>& stats) {
    const int W = 800, H = 560;
    const int left = 70, right = 770, top = 50, bottom = 500;
    ImageRGB img(W, H, 255);
    const Rgb black{0, 0, 0}, grid{220, 220, 220};
    const Rgb train_color{31, 119, 180}, val_color{214, 96, 32};

    int max_epoch = 1;
    for (const auto& s : stats) max_epoch = std::max(max_epoch, s.epoch);

    const auto px = [&](double epoch) {
        return left + static_cast<int>(std::lround((epoch - 1) / std::max(1.0, max_epoch - 1.0) *
                                                   (right - left)));
    };
    const auto py = [&](double acc) {
        return bottom - static_cast<int>(std::lround(std::clamp(acc, 0.0, 1.0) * (bottom - top)));
    };

    for (int i = 0; i <= 10; ++i) {
        const double acc = i / 10.0;
        plotdetail::line(img, left, py(acc), right, py(acc), grid);
        plotdetail::text(img, 14, py(acc) - 3, (i == 10 ? "1.0" : "0." + std::to_string(i)), black);
    }
    const int x_step = std::max(1, max_epoch / 10);
    for (int e = 1; e <= max_epoch; e += x_step) {
        plotdetail::line(img, px(e), bottom, px(e), bottom + 4, black);
        plotdetail::text(img, px(e) - 5, bottom + 8, std::to_string(e), black);
    }
    plotdetail::line(img, left, top, left, bottom, black);
    plotdetail::line(img, left, bottom, right, bottom, black);
    plotdetail::text(img, left, 14, "MEAN ACCURACY ACROSS FOLDS (+/- STD)", black);
    plotdetail::text(img, left, 28, "TRAIN", train_color);
    plotdetail::text(img, left + 50, 28, "FOLD-VAL", val_color);
    plotdetail::text(img, right - 40, bottom + 22, "EPOCH", black);

    auto draw_series = [&](Rgb color, auto mean_of, auto std_of) {
        for (size_t i = 0; i + 1 < stats.size(); ++i)
            plotdetail::line(img, px(stats[i].epoch), py(mean_of(stats[i])), px(stats[i + 1].epoch),
                             py(mean_of(stats[i + 1])), color);
        for (const auto& s : stats) {
            const int x = px(s.epoch);
            const int y_lo = py(mean_of(s) - std_of(s));
            const int y_hi = py(mean_of(s) + std_of(s));
            plotdetail::line(img, x, y_lo, x, y_hi, color);
            plotdetail::line(img, x - 2, y_lo, x + 2, y_lo, color);
            plotdetail::line(img, x - 2, y_hi, x + 2, y_hi, color);
        }
    };
    draw_series(train_color, [](const CurveStats& s) { return s.train_mean; },
                [](const CurveStats& s) { return s.train_std; });
    draw_series(val_color, [](const CurveStats& s) { return s.val_mean; },
                [](const CurveStats& s) { return s.val_std; });
    return img;
}

} // namespace panelkit
