#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>

#include "panelkit/gradcam.hpp"
#include "panelkit/nn.hpp"
#include "panelkit/rng.hpp"

using namespace panelkit;

namespace {

// Two-channel 1x1 conv -> global average -> 2-way dense head. Every weight
// is hand-picked so the attribution map has a closed form.
nn::Network make_oracle_net(float conv_w0, float conv_b0, float conv_w1, float conv_b1,
                            std::array<float, 4> fc_w, std::array<float, 2> fc_b) {
    nn::Network net;
    net.backbone_id = "oracle";
    net.num_classes = 2;
    net.in_channels = 1;
    net.channel_mean = {0.0f};
    net.channel_std = {1.0f};
    net.add("layer1", std::make_unique<nn::Conv2d>(1, 2, 1, 1, 0, true));
    net.add("gap", std::make_unique<nn::GlobalAvgPool>());
    net.add("fc", std::make_unique<nn::Dense>(2, 2));
    const auto params = net.parameters(); // conv w, conv b, fc w, fc b
    REQUIRE(params.size() == 4);
    params[0]->w = {conv_w0, conv_w1};
    params[1]->w = {conv_b0, conv_b1};
    params[2]->w = {fc_w[0], fc_w[1], fc_w[2], fc_w[3]};
    params[3]->w = {fc_b[0], fc_b[1]};
    return net;
}

nn::Tensor tensor_from(const std::vector<float>& values, int h, int w) {
    nn::Tensor t(1, 1, h, w);
    t.data = values;
    return t;
}

} // namespace

TEST_CASE("heatmap on the 1x1-conv network matches the closed form", "[gradcam]") {
    // A_0 = 0.5x + 0.1 and A_1 = -0.25x + 0.2; class-0 logit reads the
    // global averages through weights (1, -2). The gradient of the logit at
    // every conv output position is w_k / 16, so alpha = (1/16, -2/16), and
    //   map(x) = ReLU(alpha_0 A_0 + alpha_1 A_1) = ReLU(0.0625x - 0.01875).
    // Min-max over the inputs below peaks at x = 10, giving the normalized
    // value max(0, 10x - 3) / 97.
    auto net = make_oracle_net(0.5f, 0.1f, -0.25f, 0.2f, {1.0f, -2.0f, 0.5f, 0.75f}, {0.0f, 0.0f});
    const std::vector<float> x{1, 2,  3,  4,  5,  6,  7,  8,
                               9, 10, -1, -2, -3, -4, 0.5f, 1.5f};
    const auto hm = grad_cam_raw(net, tensor_from(x, 4, 4), 0, "layer1", 4, 4);

    CHECK_FALSE(hm.degenerate);
    CHECK(hm.target_class == 0);
    CHECK(hm.target_layer == "layer1");
    REQUIRE(hm.feature_w == 4);
    REQUIRE(hm.feature_h == 4);
    REQUIRE(hm.feature_values.size() == 16);
    for (size_t i = 0; i < x.size(); ++i) {
        const double expected = std::max(0.0, 10.0 * x[i] - 3.0) / 97.0;
        CAPTURE(i, x[i]);
        CHECK(std::abs(hm.feature_values[i] - expected) < 1e-6);
    }
    // 4x4 -> 4x4 upsampling is the identity, so image-resolution values
    // coincide with the feature-resolution map.
    REQUIRE(hm.values.size() == 16);
    for (size_t i = 0; i < 16; ++i) CHECK(hm.values[i] == Catch::Approx(hm.feature_values[i]));
}

TEST_CASE("heatmap is invariant under positive scaling of the class logit", "[gradcam]") {
    auto net = nn::make_backbone("tiny", 3, 11);
    Rng rng(5);
    nn::Tensor input(1, 1, 48, 48);
    for (auto& v : input.data) v = rng.uniform_float() * 2.0f - 1.0f;

    const auto base = grad_cam_raw(net, input, 1, "layer4", 48, 48);
    // Scale the whole head: logits become c * (Wg + b), so the target score
    // is multiplied by a positive constant.
    auto params = net.parameters();
    for (auto* p : {params[params.size() - 2], params[params.size() - 1]})
        for (auto& w : p->w) w *= 3.7f;
    const auto scaled = grad_cam_raw(net, input, 1, "layer4", 48, 48);

    REQUIRE_FALSE(base.degenerate);
    REQUIRE(base.values.size() == scaled.values.size());
    for (size_t i = 0; i < base.values.size(); ++i) {
        CAPTURE(i);
        CHECK(std::abs(base.values[i] - scaled.values[i]) < 1e-6);
    }
}

TEST_CASE("identically zero target activations flag a degenerate heatmap", "[gradcam]") {
    auto net = make_oracle_net(0.0f, 0.0f, 0.0f, 0.0f, {1.0f, 2.0f, 3.0f, 4.0f}, {0.1f, 0.2f});
    const auto hm = grad_cam_raw(net, tensor_from(std::vector<float>(16, 1.0f), 4, 4), 0,
                                 "layer1", 4, 4);
    CHECK(hm.degenerate);
    for (float v : hm.values) CHECK(v == 0.0f);
    for (float v : hm.feature_values) CHECK(v == 0.0f);
}

TEST_CASE("constant positive pre-normalization map becomes all ones", "[gradcam]") {
    auto net = make_oracle_net(0.0f, 0.5f, 0.0f, 0.25f, {1.0f, 1.0f, 0.0f, 0.0f}, {0.0f, 0.0f});
    const auto hm = grad_cam_raw(net, tensor_from(std::vector<float>(16, 0.0f), 4, 4), 0,
                                 "layer1", 4, 4);
    CHECK_FALSE(hm.degenerate);
    for (float v : hm.feature_values) CHECK(v == 1.0f);
}

TEST_CASE("real-model heatmaps stay in bounds with max one", "[gradcam]") {
    FoldModel fm;
    fm.net = nn::make_backbone("tiny", 4, 21);
    ImageU8 image(64, 48);
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 64; ++x)
            image.px[static_cast<size_t>(y) * 64 + x] = static_cast<uint8_t>((x * 3 + y * 2) % 256);

    auto hm = grad_cam(fm, image, 2, 32);
    CHECK(hm.width == image.width);
    CHECK(hm.height == image.height);
    CHECK(hm.values.size() == static_cast<size_t>(64 * 48));
    float hi = 0.0f;
    for (float v : hm.values) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
        hi = std::max(hi, v);
    }
    if (!hm.degenerate) {
        float feature_hi = 0.0f;
        for (float v : hm.feature_values) feature_hi = std::max(feature_hi, v);
        CHECK(feature_hi == 1.0f); // normalization contract at feature resolution
    }
}

TEST_CASE("default target is the predicted class", "[gradcam]") {
    FoldModel fm;
    fm.net = nn::make_backbone("tiny", 5, 33);
    ImageU8 image(40, 40, 200);
    for (int i = 0; i < 40; ++i) image.px[static_cast<size_t>(i) * 40 + i] = 0;

    const auto input = preprocess_input(image, 32, fm.net.channel_mean, fm.net.channel_std);
    const auto probs = fm.predict_probs(input);
    int argmax = 0;
    for (int j = 1; j < 5; ++j)
        if (probs[j] > probs[argmax]) argmax = j;

    const auto hm = grad_cam(fm, image, std::nullopt, 32);
    CHECK(hm.target_class == argmax);
}

TEST_CASE("attribution requests that select no scalar score are rejected", "[gradcam]") {
    auto net = make_oracle_net(0.5f, 0.0f, 0.5f, 0.0f, {1.0f, 0.0f, 0.0f, 1.0f}, {0.0f, 0.0f});
    CHECK_THROWS_AS(grad_cam_raw(net, tensor_from(std::vector<float>(16, 1.0f), 4, 4), 0,
                                 "nosuch", 4, 4),
                    LayerNotFoundError);
    nn::Tensor batch2(2, 1, 4, 4);
    CHECK_THROWS_AS(grad_cam_raw(net, batch2, 0, "layer1", 4, 4), NonScalarTargetError);
    CHECK_THROWS_AS(grad_cam_raw(net, tensor_from(std::vector<float>(16, 1.0f), 4, 4), 5,
                                 "layer1", 4, 4),
                    NonScalarTargetError);
    CHECK_THROWS_AS(grad_cam_raw(net, tensor_from(std::vector<float>(16, 1.0f), 4, 4), -1,
                                 "layer1", 4, 4),
                    NonScalarTargetError);
}

TEST_CASE("overlay blend matches hand arithmetic at anchor values", "[gradcam]") {
    // Heatmap values 0, 0.25, 0.5 and 1 land exactly on colormap anchors:
    // (68,1,84), (62,74,137), (38,130,142), (253,231,37).
    Heatmap hm;
    hm.width = 2;
    hm.height = 2;
    hm.values = {0.0f, 0.25f, 0.5f, 1.0f};
    ImageU8 image(2, 2);
    image.px = {10, 100, 200, 255};

    const auto out = overlay(hm, image, 0.4f);
    REQUIRE(out.width == 2);
    REQUIRE(out.height == 2);
    // out = round(0.6 * gray + 0.4 * color), channelwise.
    const std::vector<uint8_t> expected{
        33, 6, 40,      // 0.6*10  + 0.4*(68,1,84)
        85, 90, 115,    // 0.6*100 + 0.4*(62,74,137)
        135, 172, 177,  // 0.6*200 + 0.4*(38,130,142)
        254, 245, 168,  // 0.6*255 + 0.4*(253,231,37)
    };
    CHECK(out.px == expected);
}

TEST_CASE("overlay limit cases: vanishing alpha and saturated heatmap", "[gradcam]") {
    Heatmap hm;
    hm.width = 3;
    hm.height = 1;
    hm.values = {0.1f, 0.6f, 0.9f};
    ImageU8 image(3, 1);
    image.px = {17, 130, 250};

    const auto plain = overlay(hm, image, 0.0f);
    for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 3; ++c) CHECK(plain.px[static_cast<size_t>(i) * 3 + c] == image.px[i]);

    Heatmap full = hm;
    std::fill(full.values.begin(), full.values.end(), 1.0f);
    const auto saturated = overlay(full, image, 1.0f);
    for (int i = 0; i < 3; ++i) {
        CHECK(saturated.px[static_cast<size_t>(i) * 3 + 0] == 253);
        CHECK(saturated.px[static_cast<size_t>(i) * 3 + 1] == 231);
        CHECK(saturated.px[static_cast<size_t>(i) * 3 + 2] == 37);
    }
}

TEST_CASE("overlay validates dimensions and alpha", "[gradcam]") {
    Heatmap hm;
    hm.width = 2;
    hm.height = 2;
    hm.values.assign(4, 0.5f);
    ImageU8 tall(2, 3);
    CHECK_THROWS_AS(overlay(hm, tall), DimensionMismatchError);
    ImageU8 ok(2, 2);
    CHECK_THROWS_AS(overlay(hm, ok, 1.5f), ConfigError);
    CHECK_THROWS_AS(overlay(hm, ok, -0.1f), ConfigError);
}

TEST_CASE("mean heatmap averages with weights and renormalizes", "[gradcam]") {
    Heatmap a;
    a.width = 2;
    a.height = 1;
    a.values = {1.0f, 0.0f};
    Heatmap b = a;
    b.values = {0.0f, 0.5f};

    // Weights 3 and 1: raw mean is (0.75, 0.125); renormalized peak at 1.
    const auto mixed = mean_heatmap({a, b}, {3.0, 1.0});
    CHECK(mixed.values[0] == Catch::Approx(1.0f));
    CHECK(mixed.values[1] == Catch::Approx(0.125f / 0.75f));

    // All mass on one map reproduces that map (already normalized).
    const auto solo = mean_heatmap({a, b}, {1.0, 0.0});
    CHECK(solo.values[0] == 1.0f);
    CHECK(solo.values[1] == 0.0f);

    CHECK_THROWS_AS(mean_heatmap({}, {}), ConfigError);
    CHECK_THROWS_AS(mean_heatmap({a}, {1.0, 2.0}), ConfigError);
    CHECK_THROWS_AS(mean_heatmap({a, b}, {0.0, 0.0}), ConfigError);
    Heatmap wide;
    wide.width = 3;
    wide.height = 1;
    wide.values = {0.0f, 0.0f, 1.0f};
    CHECK_THROWS_AS(mean_heatmap({a, wide}, {1.0, 1.0}), DimensionMismatchError);
}

TEST_CASE("stroke-mass statistic separates near and far heatmap mass", "[gradcam]") {
    ImageU8 rendered(8, 8, 255);
    rendered.px[4 * 8 + 4] = 0; // single stroke pixel at (4, 4)

    Heatmap hm;
    hm.width = 8;
    hm.height = 8;
    hm.values.assign(64, 0.25f);
    for (int y = 3; y <= 5; ++y)
        for (int x = 3; x <= 5; ++x) hm.values[static_cast<size_t>(y) * 8 + x] = 0.5f;

    StrokeMassStat stat;
    accumulate_stroke_mass(stat, hm, rendered, 0, 1);
    CHECK(stat.pages == 1);
    CHECK(stat.near_pixels == 9); // Chebyshev radius 1 around (4, 4)
    CHECK(stat.far_pixels == 55);
    CHECK(stat.near_mass == Catch::Approx(4.5));
    CHECK(stat.far_mass == Catch::Approx(13.75));
    CHECK(stat.near_mean() > stat.far_mean());

    Heatmap wrong;
    wrong.width = 4;
    wrong.height = 4;
    wrong.values.assign(16, 0.0f);
    CHECK_THROWS_AS(accumulate_stroke_mass(stat, wrong, rendered, 0, 1), DimensionMismatchError);
}
