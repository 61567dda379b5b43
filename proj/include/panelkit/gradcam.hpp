#pragma once

// Gradient-weighted class activation maps: channel weights are the spatial
// mean of the target-class score's gradient at a convolutional activation;
// the map is the rectified weighted sum of that activation, min-max
// normalized per image and bilinearly upsampled to image resolution.

#include <optional>
#include <string>
#include <vector>

#include "panelkit/classifier.hpp"
#include "panelkit/image.hpp"
#include "panelkit/nn.hpp"

namespace panelkit {

struct Heatmap {
    int width = 0, height = 0;  // image resolution after upsampling
    std::vector<float> values;  // row-major, all in [0,1]
    int target_class = 0;
    std::string target_layer;
    bool degenerate = false;    // pre-normalization map was identically zero
    int feature_w = 0, feature_h = 0;
    std::vector<float> feature_values; // normalized map at feature resolution
};

// Core computation on an already-preprocessed single-sample tensor; the
// result is upsampled to (out_w, out_h).
inline Heatmap grad_cam_raw(nn::Network& net, const nn::Tensor& input, int target_class,
                            const std::string& target_layer, int out_w, int out_h) {
    if (input.n != 1)
        throw NonScalarTargetError("attribution target must be one sample's class score");
    if (!net.has_layer(target_layer))
        throw LayerNotFoundError("layer '" + target_layer + "' not found");
    const auto logits = net.forward(input, false);
    if (logits.h != 1 || logits.w != 1)
        throw NonScalarTargetError("network head does not produce per-class scalars");
    if (target_class < 0 || target_class >= logits.c)
        throw NonScalarTargetError("class " + std::to_string(target_class) +
                                   " selects no scalar score in a " + std::to_string(logits.c) +
                                   "-way head");

    nn::Tensor dscore(1, logits.c, 1, 1);
    dscore.at(0, target_class, 0, 0) = 1.0f;
    net.backward(dscore);

    const auto& act = net.activation(target_layer);
    const auto& grad = net.activation_grad(target_layer);

    Heatmap hm;
    hm.target_class = target_class;
    hm.target_layer = target_layer;
    hm.feature_w = act.w;
    hm.feature_h = act.h;
    hm.feature_values.assign(static_cast<size_t>(act.h) * act.w, 0.0f);

    const float plane_scale = 1.0f / static_cast<float>(act.plane());
    for (int k = 0; k < act.c; ++k) {
        double gsum = 0.0;
        for (int y = 0; y < act.h; ++y)
            for (int x = 0; x < act.w; ++x) gsum += grad.at(0, k, y, x);
        const float alpha = static_cast<float>(gsum) * plane_scale;
        for (int y = 0; y < act.h; ++y)
            for (int x = 0; x < act.w; ++x)
                hm.feature_values[static_cast<size_t>(y) * act.w + x] +=
                    alpha * act.at(0, k, y, x);
    }
    for (auto& v : hm.feature_values) v = std::max(v, 0.0f);

    float lo = hm.feature_values.front(), hi = lo;
    for (float v : hm.feature_values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi == 0.0f) {
        hm.degenerate = true; // all zero: flagged rather than divided by zero
    } else if (hi == lo) {
        for (auto& v : hm.feature_values) v = 1.0f; // constant positive map
    } else {
        for (auto& v : hm.feature_values) v = (v - lo) / (hi - lo);
    }

    hm.width = out_w;
    hm.height = out_h;
    hm.values = upsample_bilinear(hm.feature_values, hm.feature_w, hm.feature_h, out_w, out_h);
    return hm;
}

// Page-level entry point: preprocesses like the classifier, targets the
// predicted class unless one is given.
inline Heatmap grad_cam(FoldModel& model, const ImageU8& image, std::optional<int> target_class,
                        int input_size, const std::string& target_layer = "layer4") {
    const auto input =
        preprocess_input(image, input_size, model.net.channel_mean, model.net.channel_std);
    int cls;
    if (target_class) {
        cls = *target_class;
    } else {
        const auto probs = model.predict_probs(input);
        cls = 0;
        for (int j = 1; j < static_cast<int>(probs.size()); ++j)
            if (probs[j] > probs[cls]) cls = j;
    }
    return grad_cam_raw(model.net, input, cls, target_layer, image.width, image.height);
}

// Weighted mean of aligned heatmaps (weights typically each model's
// probability for the target class). Re-normalized to [0,1].
inline Heatmap mean_heatmap(const std::vector<Heatmap>& maps, const std::vector<double>& weights) {
    if (maps.empty() || maps.size() != weights.size())
        throw ConfigError("mean heatmap needs one weight per map");
    Heatmap out = maps.front();
    std::fill(out.values.begin(), out.values.end(), 0.0f);
    double wsum = 0.0;
    for (size_t m = 0; m < maps.size(); ++m) {
        if (maps[m].values.size() != out.values.size())
            throw DimensionMismatchError("heatmap sizes differ");
        for (size_t i = 0; i < out.values.size(); ++i)
            out.values[i] += static_cast<float>(weights[m]) * maps[m].values[i];
        wsum += weights[m];
    }
    if (wsum <= 0.0) throw ConfigError("weights must have positive mass");
    float hi = 0.0f;
    for (auto& v : out.values) {
        v = static_cast<float>(v / wsum);
        hi = std::max(hi, v);
    }
    out.degenerate = hi == 0.0f;
    if (hi > 0.0f)
        for (auto& v : out.values) v /= hi;
    out.feature_values.clear();
    return out;
}

// ---------------------------------------------------------------------------
// Overlay rendering
// ---------------------------------------------------------------------------

namespace detail {

// Anchor colors of a perceptually-ordered map (dark violet to yellow),
// linearly interpolated.
inline std::array<uint8_t, 3> colormap(float t) {
    static constexpr std::array<std::array<float, 3>, 9> anchors{{{68, 1, 84},
                                                                  {72, 40, 120},
                                                                  {62, 74, 137},
                                                                  {49, 104, 142},
                                                                  {38, 130, 142},
                                                                  {31, 158, 137},
                                                                  {53, 183, 121},
                                                                  {109, 205, 89},
                                                                  {253, 231, 37}}};
    t = std::clamp(t, 0.0f, 1.0f) * 8.0f;
    const int lo = std::min(static_cast<int>(t), 7);
    const float f = t - static_cast<float>(lo);
    std::array<uint8_t, 3> out{};
    for (int c = 0; c < 3; ++c) {
        const float v = anchors[lo][c] + f * (anchors[lo + 1][c] - anchors[lo][c]);
        out[c] = static_cast<uint8_t>(std::lround(std::clamp(v, 0.0f, 255.0f)));
    }
    return out;
}

} // namespace detail

// out = (1 - alpha) * gray + alpha * colormap(h), pixelwise.
inline ImageRGB overlay(const Heatmap& hm, const ImageU8& image, float alpha = 0.4f) {
    if (hm.width != image.width || hm.height != image.height)
        throw DimensionMismatchError("heatmap and image dimensions differ");
    if (alpha < 0.0f || alpha > 1.0f) throw ConfigError("alpha must lie in [0, 1]");
    ImageRGB out(image.width, image.height);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x) {
            const size_t i = static_cast<size_t>(y) * image.width + x;
            const float gray = static_cast<float>(image.px[i]);
            const auto color = detail::colormap(hm.values[i]);
            for (int c = 0; c < 3; ++c) {
                const float v = (1.0f - alpha) * gray + alpha * static_cast<float>(color[c]);
                out.px[i * 3 + c] = static_cast<uint8_t>(std::lround(std::clamp(v, 0.0f, 255.0f)));
            }
        }
    return out;
}

// Corpus-level attention statistic: how much heatmap mass falls near panel
// strokes versus elsewhere. "Near" is a Chebyshev dilation of the stroke
// pixels.
struct StrokeMassStat {
    double near_mass = 0.0;   // sum of heatmap values near strokes
    double far_mass = 0.0;    // sum elsewhere
    size_t near_pixels = 0;
    size_t far_pixels = 0;
    size_t pages = 0;

    double near_mean() const { return near_pixels ? near_mass / static_cast<double>(near_pixels) : 0.0; }
    double far_mean() const { return far_pixels ? far_mass / static_cast<double>(far_pixels) : 0.0; }
};

inline void accumulate_stroke_mass(StrokeMassStat& stat, const Heatmap& hm, const ImageU8& rendered,
                                   uint8_t stroke_value, int dilation = 12) {
    if (hm.width != rendered.width || hm.height != rendered.height)
        throw DimensionMismatchError("heatmap and rendered page dimensions differ");
    std::vector<uint8_t> mask(rendered.px.size(), 0);
    for (size_t i = 0; i < mask.size(); ++i) mask[i] = rendered.px[i] == stroke_value ? 1 : 0;
    const auto near = dilate_square(mask, rendered.width, rendered.height, dilation);
    for (size_t i = 0; i < near.size(); ++i) {
        if (near[i]) {
            stat.near_mass += hm.values[i];
            ++stat.near_pixels;
        } else {
            stat.far_mass += hm.values[i];
            ++stat.far_pixels;
        }
    }
    ++stat.pages;
}

} // namespace panelkit
