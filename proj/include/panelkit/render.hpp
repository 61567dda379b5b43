#pragma once

// The three ablation variants of a facing page: the page as-is, the page with
// text/character rectangles painted over, and a clean canvas with only the
// panel frames stroked.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "panelkit/annotation.hpp"
#include "panelkit/errors.hpp"
#include "panelkit/image.hpp"
#include "panelkit/perturb.hpp"

namespace panelkit {

enum class AblationMode { Unprocessed, Masked, FrameOnly };

inline const char* to_string(AblationMode m) {
    switch (m) {
        case AblationMode::Unprocessed: return "unprocessed";
        case AblationMode::Masked: return "masked";
        case AblationMode::FrameOnly: return "frame_only";
    }
    return "?";
}

inline std::optional<AblationMode> ablation_mode_from(std::string_view s) {
    if (s == "unprocessed") return AblationMode::Unprocessed;
    if (s == "masked") return AblationMode::Masked;
    if (s == "frame_only") return AblationMode::FrameOnly;
    return std::nullopt;
}

struct RenderConfig {
    uint8_t mask_fill = 255;
    uint8_t stroke_value = 0;
    int stroke_width = 3;     // at source resolution, survives model-input downscaling
    uint8_t canvas_value = 255;
};

struct SourceRef {
    std::string title;
    int page_index = 0;
    friend bool operator==(const SourceRef&, const SourceRef&) = default;
};

// Raster at source page resolution; resizing to model input happens in the
// classifier adapter.
struct RenderedImage {
    ImageU8 pixels;
    AblationMode mode = AblationMode::Unprocessed;
    SourceRef source;
};

// Which variant (and noise, for FrameOnly) produces a training image. The
// five corpus modes are Unprocessed, Masked, FrameOnly, and FrameOnly with
// either noise family applied.
struct AblationSpec {
    AblationMode mode = AblationMode::FrameOnly;
    std::optional<NoiseSpec> noise; // only meaningful with FrameOnly

    // Directory key for rendered corpora, e.g. "frame_only_rect10". The
    // noise seed is recorded in the corpus index, not the path.
    std::string dir_name() const {
        std::string out = to_string(mode);
        if (mode == AblationMode::FrameOnly && noise && noise->range > 0) {
            out += noise->family == NoiseFamily::Rectangular ? "_rect" : "_quad";
            out += std::to_string(noise->range);
        }
        return out;
    }
};

namespace detail {

inline void require_dims_match(const ImageU8& img, const PageAnnotation& page) {
    if (img.width != page.width || img.height != page.height)
        throw DimensionMismatchError("image " + std::to_string(img.width) + "x" +
                                     std::to_string(img.height) + " vs annotation " +
                                     std::to_string(page.width) + "x" +
                                     std::to_string(page.height) + " (page " +
                                     std::to_string(page.index) + ")");
}

} // namespace detail

inline RenderedImage render_unprocessed(const ImageU8& page_image, const PageAnnotation& page,
                                        const SourceRef& source = {}) {
    detail::require_dims_match(page_image, page);
    return {page_image, AblationMode::Unprocessed, source};
}

// Paints cfg.mask_fill over every Text/Face/Body rectangle; Frame regions are
// never mask sources. Idempotent by construction.
inline RenderedImage render_masked(const ImageU8& page_image, const PageAnnotation& page,
                                   const RenderConfig& cfg = {}, const SourceRef& source = {}) {
    detail::require_dims_match(page_image, page);
    RenderedImage out{page_image, AblationMode::Masked, source};
    for (const auto& r : page.regions) {
        if (!is_mask_source(r.kind)) continue;
        fill_rect(out.pixels, r.box.xmin, r.box.ymin, r.box.xmax, r.box.ymax, cfg.mask_fill);
    }
    return out;
}

// Strokes each frame's four edges on a fresh canvas; no source pixels are
// consulted. Pages without frames are excluded upstream, so an empty frame
// list here is a pipeline bug.
inline RenderedImage render_frame_only(const PageAnnotation& page, const std::vector<Quad>& frames,
                                       const RenderConfig& cfg = {}, const SourceRef& source = {}) {
    if (frames.empty())
        throw EmptyFrameListError("page " + std::to_string(page.index) +
                                  " reached frame-only rendering with no frames");
    RenderedImage out{ImageU8(page.width, page.height, cfg.canvas_value), AblationMode::FrameOnly,
                      source};
    for (const auto& q : frames) {
        for (int i = 0; i < 4; ++i)
            draw_segment(out.pixels, q.v[i], q.v[(i + 1) % 4], cfg.stroke_value,
                         cfg.stroke_width);
    }
    return out;
}

inline std::vector<Quad> frame_quads(const PageAnnotation& page) {
    std::vector<Quad> out;
    for (const auto& r : page.regions)
        if (r.kind == RegionKind::Frame) out.push_back(Quad::from_box(r.box));
    return out;
}

// One-call dispatch used by the corpus builder and CLI. FrameOnly ignores the
// source image (pass an empty one when rendering synthetic pages).
inline RenderedImage render_page(const ImageU8& page_image, const PageAnnotation& page,
                                 const AblationSpec& spec, const RenderConfig& cfg,
                                 const std::string& book_title) {
    const SourceRef source{book_title, page.index};
    switch (spec.mode) {
        case AblationMode::Unprocessed: return render_unprocessed(page_image, page, source);
        case AblationMode::Masked: return render_masked(page_image, page, cfg, source);
        case AblationMode::FrameOnly: {
            const std::vector<Quad> quads = (spec.noise && spec.noise->range > 0)
                                                ? perturb_page(page, *spec.noise, book_title)
                                                : frame_quads(page);
            return render_frame_only(page, quads, cfg, source);
        }
    }
    throw Error("unreachable ablation mode");
}

// Mirrors a page annotation about the vertical axis; used by the rendering
// symmetry tests.
inline PageAnnotation mirror_page(const PageAnnotation& page) {
    PageAnnotation out = page;
    for (auto& r : out.regions) {
        const BBox b = r.box;
        r.box = BBox{page.width - b.xmax, b.ymin, page.width - b.xmin, b.ymax};
    }
    return out;
}

} // namespace panelkit
