#pragma once

// Vertex-noise families applied to panel frames before frame-only rendering.
// Offsets are i.i.d. integer draws from U[-d, +d] (inclusive); draws are
// repeated (up to a cap) until the clamped result is a valid panel shape, so
// the offset distribution stays unbiased for non-degenerate boxes.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "panelkit/annotation.hpp"
#include "panelkit/errors.hpp"
#include "panelkit/image.hpp"
#include "panelkit/rng.hpp"

namespace panelkit {

// Four vertices in top-left, top-right, bottom-right, bottom-left order,
// stored as pixel corner positions (a box [xmin,xmax) maps its right corners
// to column xmax-1).
struct Quad {
    std::array<PointI, 4> v{};

    static Quad from_box(const BBox& b) {
        return Quad{{PointI{b.xmin, b.ymin}, PointI{b.xmax - 1, b.ymin},
                     PointI{b.xmax - 1, b.ymax - 1}, PointI{b.xmin, b.ymax - 1}}};
    }

    bool is_axis_aligned_rect() const {
        return v[0].y == v[1].y && v[2].y == v[3].y && v[1].x == v[2].x && v[0].x == v[3].x &&
               v[0].x < v[1].x && v[0].y < v[3].y;
    }

    friend bool operator==(const Quad&, const Quad&) = default;
};

enum class NoiseFamily { Rectangular, Quadrilateral };

inline const char* to_string(NoiseFamily f) {
    return f == NoiseFamily::Rectangular ? "rectangular" : "quadrilateral";
}

struct NoiseSpec {
    NoiseFamily family = NoiseFamily::Rectangular;
    int range = 0; // d: offsets drawn from [-d, +d]; d = 0 is the identity
    uint64_t seed = 0;
};

namespace detail {

constexpr int kMaxRedraws = 64;

inline int64_t cross(PointI o, PointI a, PointI b) {
    return static_cast<int64_t>(a.x - o.x) * (b.y - o.y) -
           static_cast<int64_t>(a.y - o.y) * (b.x - o.x);
}

inline bool on_segment(PointI p, PointI q, PointI r) {
    return std::min(p.x, r.x) <= q.x && q.x <= std::max(p.x, r.x) && std::min(p.y, r.y) <= q.y &&
           q.y <= std::max(p.y, r.y);
}

// Any contact between the segments counts as an intersection.
inline bool segments_intersect(PointI a, PointI b, PointI c, PointI d) {
    const int64_t d1 = cross(c, d, a);
    const int64_t d2 = cross(c, d, b);
    const int64_t d3 = cross(a, b, c);
    const int64_t d4 = cross(a, b, d);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
        return true;
    if (d1 == 0 && on_segment(c, a, d)) return true;
    if (d2 == 0 && on_segment(c, b, d)) return true;
    if (d3 == 0 && on_segment(a, c, b)) return true;
    if (d4 == 0 && on_segment(a, d, b)) return true;
    return false;
}

inline int64_t twice_signed_area(const Quad& q) {
    int64_t s = 0;
    for (int i = 0; i < 4; ++i) {
        const PointI& a = q.v[i];
        const PointI& b = q.v[(i + 1) % 4];
        s += static_cast<int64_t>(a.x) * b.y - static_cast<int64_t>(b.x) * a.y;
    }
    return s;
}

} // namespace detail

// Simple = opposite edges never touch and the area is non-zero. Adjacent
// edges share a vertex, so only the two opposite pairs can cross.
inline bool quad_is_simple(const Quad& q) {
    if (detail::segments_intersect(q.v[0], q.v[1], q.v[2], q.v[3])) return false;
    if (detail::segments_intersect(q.v[1], q.v[2], q.v[3], q.v[0])) return false;
    return detail::twice_signed_area(q) != 0;
}

// Rectangular family: one offset per edge, the only 4-degree-of-freedom shift
// that keeps the panel axis-aligned. Result validity is checked after
// clamping so edge-hugging boxes stay non-degenerate.
inline Quad perturb_rectangular(const BBox& box, const NoiseSpec& spec,
                                std::pair<int, int> page_dims, Rng& rng) {
    const int d = spec.range;
    if (d == 0) return Quad::from_box(box);
    const auto [pw, ph] = page_dims;
    for (int attempt = 0; attempt < detail::kMaxRedraws; ++attempt) {
        const int xmin = std::clamp(box.xmin + static_cast<int>(rng.uniform_int(-d, d)), 0, pw);
        const int ymin = std::clamp(box.ymin + static_cast<int>(rng.uniform_int(-d, d)), 0, ph);
        const int xmax = std::clamp(box.xmax + static_cast<int>(rng.uniform_int(-d, d)), 0, pw);
        const int ymax = std::clamp(box.ymax + static_cast<int>(rng.uniform_int(-d, d)), 0, ph);
        // Width/height >= 2 so the inclusive corner quad keeps positive area,
        // matching the simplicity guarantee of the quadrilateral family.
        if (xmin + 1 < xmax && ymin + 1 < ymax)
            return Quad::from_box(BBox{xmin, ymin, xmax, ymax});
    }
    throw DegenerateBoxError("rectangular perturbation found no valid draw after " +
                             std::to_string(detail::kMaxRedraws) + " attempts");
}

// Quadrilateral family: an independent (dx, dy) per corner; redrawn until the
// quad is simple.
inline Quad perturb_quadrilateral(const BBox& box, const NoiseSpec& spec,
                                  std::pair<int, int> page_dims, Rng& rng) {
    const Quad base = Quad::from_box(box);
    if (spec.range == 0) return base;
    const int d = spec.range;
    const auto [pw, ph] = page_dims;
    for (int attempt = 0; attempt < detail::kMaxRedraws; ++attempt) {
        Quad q;
        for (int i = 0; i < 4; ++i) {
            q.v[i].x = std::clamp(base.v[i].x + static_cast<int>(rng.uniform_int(-d, d)), 0, pw - 1);
            q.v[i].y = std::clamp(base.v[i].y + static_cast<int>(rng.uniform_int(-d, d)), 0, ph - 1);
        }
        if (quad_is_simple(q)) return q;
    }
    throw DegenerateBoxError("quadrilateral perturbation found no valid draw after " +
                             std::to_string(detail::kMaxRedraws) + " attempts");
}

inline Quad perturb_box(const BBox& box, const NoiseSpec& spec, std::pair<int, int> page_dims,
                        Rng& rng) {
    return spec.family == NoiseFamily::Rectangular
               ? perturb_rectangular(box, spec, page_dims, rng)
               : perturb_quadrilateral(box, spec, page_dims, rng);
}

// Perturbs every frame of a page. Each frame gets its own substream derived
// from (seed, title, page index, frame ordinal), so results do not depend on
// evaluation order across parallel workers.
inline std::vector<Quad> perturb_page(const PageAnnotation& page, const NoiseSpec& spec,
                                      const std::string& book_title) {
    std::vector<Quad> out;
    int ordinal = 0;
    for (const auto& region : page.regions) {
        if (region.kind != RegionKind::Frame) continue;
        Rng rng(derive_seed(spec.seed, book_title, page.index, ordinal));
        try {
            out.push_back(perturb_box(region.box, spec, {page.width, page.height}, rng));
        } catch (const DegenerateBoxError& e) {
            throw DegenerateBoxError(std::string(e.what()) + " (frame '" + region.id + "')",
                                     region.id);
        }
        ++ordinal;
    }
    return out;
}

} // namespace panelkit
