#include <catch2/catch_amalgamated.hpp>

#include "panelkit/nn.hpp"

#include <sstream>

using namespace panelkit;
using namespace panelkit::nn;

namespace {

Tensor random_tensor(int n, int c, int h, int w, Rng& rng, float scale = 1.0f) {
    Tensor t(n, c, h, w);
    for (auto& v : t.data) v = static_cast<float>(rng.normal()) * scale;
    return t;
}

float loss_of(Network& net, const Tensor& x, const std::vector<int>& labels) {
    const auto logits = net.forward(x, true);
    return softmax_cross_entropy(logits, labels).loss;
}

// Central-difference check of every captured analytic gradient. Float
// arithmetic limits the achievable agreement; 2e-2 relative with a small
// absolute floor is the usual working tolerance.
void gradcheck(Network& net, const Tensor& x, const std::vector<int>& labels,
               int stride_params = 5) {
    net.zero_grad();
    const auto logits = net.forward(x, true);
    const auto loss = softmax_cross_entropy(logits, labels);
    const Tensor dx = net.backward(loss.dlogits);

    // Step small enough that ReLU/MaxPool kink crossings are negligible but
    // large enough to stay above float rounding noise.
    const float h = 5e-4f;
    auto close = [](float analytic, float numeric) {
        const float diff = std::abs(analytic - numeric);
        const float scale = std::max({std::abs(analytic), std::abs(numeric), 1e-2f});
        return diff <= 2e-2f * scale + 2e-4f;
    };

    for (auto* p : net.parameters()) {
        for (size_t i = 0; i < p->w.size(); i += static_cast<size_t>(stride_params)) {
            const float orig = p->w[i];
            p->w[i] = orig + h;
            const float up = loss_of(net, x, labels);
            p->w[i] = orig - h;
            const float down = loss_of(net, x, labels);
            p->w[i] = orig;
            const float numeric = (up - down) / (2 * h);
            INFO("param grad index " << i);
            REQUIRE(close(p->g[i], numeric));
        }
    }

    Tensor xp = x;
    for (size_t i = 0; i < xp.size(); i += 3) {
        const float orig = xp.data[i];
        xp.data[i] = orig + h;
        const float up = loss_of(net, xp, labels);
        xp.data[i] = orig - h;
        const float down = loss_of(net, xp, labels);
        xp.data[i] = orig;
        const float numeric = (up - down) / (2 * h);
        INFO("input grad index " << i);
        REQUIRE(close(dx.data[i], numeric));
    }
}

} // namespace

TEST_CASE("a centered identity kernel reproduces its input", "[nn]") {
    Conv2d conv(1, 1, 3, 1, 1, true);
    auto params = conv.params();
    std::fill(params[0]->w.begin(), params[0]->w.end(), 0.0f);
    params[0]->w[4] = 2.0f; // kernel center
    params[1]->w[0] = 0.5f; // bias
    Rng rng(3);
    const auto x = random_tensor(2, 1, 5, 4, rng);
    const auto y = conv.forward(x, false);
    REQUIRE(y.n == 2);
    REQUIRE(y.c == 1);
    REQUIRE(y.h == 5);
    REQUIRE(y.w == 4);
    for (int i = 0; i < 2; ++i)
        for (int yy = 0; yy < 5; ++yy)
            for (int xx = 0; xx < 4; ++xx)
                REQUIRE(y.at(i, 0, yy, xx) ==
                        Catch::Approx(2.0f * x.at(i, 0, yy, xx) + 0.5f).margin(1e-6));
}

TEST_CASE("strided convolution matches a hand-computed sum", "[nn]") {
    Conv2d conv(1, 1, 2, 2, 0, false);
    std::fill(conv.params()[0]->w.begin(), conv.params()[0]->w.end(), 1.0f);
    Tensor x(1, 1, 4, 4);
    for (int i = 0; i < 16; ++i) x.data[i] = static_cast<float>(i);
    const auto y = conv.forward(x, false);
    REQUIRE(y.h == 2);
    REQUIRE(y.w == 2);
    REQUIRE(y.at(0, 0, 0, 0) == Catch::Approx(0 + 1 + 4 + 5));
    REQUIRE(y.at(0, 0, 0, 1) == Catch::Approx(2 + 3 + 6 + 7));
    REQUIRE(y.at(0, 0, 1, 0) == Catch::Approx(8 + 9 + 12 + 13));
    REQUIRE(y.at(0, 0, 1, 1) == Catch::Approx(10 + 11 + 14 + 15));
}

TEST_CASE("batchnorm standardizes per channel in training mode", "[nn]") {
    BatchNorm2d bn(2);
    Rng rng(5);
    const auto x = random_tensor(4, 2, 3, 3, rng, 3.0f);
    const auto y = bn.forward(x, true);
    for (int j = 0; j < 2; ++j) {
        double sum = 0.0, sq = 0.0;
        for (int i = 0; i < 4; ++i)
            for (int yy = 0; yy < 3; ++yy)
                for (int xx = 0; xx < 3; ++xx) {
                    sum += y.at(i, j, yy, xx);
                    sq += y.at(i, j, yy, xx) * y.at(i, j, yy, xx);
                }
        const double m = 4 * 3 * 3;
        REQUIRE(sum / m == Catch::Approx(0.0).margin(1e-4));
        REQUIRE(sq / m == Catch::Approx(1.0).margin(1e-3));
    }
}

TEST_CASE("batchnorm eval mode uses running statistics", "[nn]") {
    BatchNorm2d bn(1);
    Rng rng(6);
    // Drive the running stats toward the data distribution.
    for (int step = 0; step < 200; ++step) bn.forward(random_tensor(8, 1, 2, 2, rng, 2.0f), true);
    Tensor x(1, 1, 1, 1);
    x.data[0] = 0.0f;
    const auto y0 = bn.forward(x, false);
    x.data[0] = 1.0f;
    const auto y1 = bn.forward(x, false);
    // Eval mode is an affine map with fixed statistics: check linearity.
    x.data[0] = 2.0f;
    const auto y2 = bn.forward(x, false);
    REQUIRE(y2.data[0] - y1.data[0] == Catch::Approx(y1.data[0] - y0.data[0]).margin(1e-5));
}

TEST_CASE("maxpool picks maxima and routes gradients to them", "[nn]") {
    MaxPool2d pool(2, 2);
    Tensor x(1, 1, 2, 4);
    x.data = {1, 5, 2, 0, 3, 2, 8, 1};
    const auto y = pool.forward(x, true);
    REQUIRE(y.h == 1);
    REQUIRE(y.w == 2);
    REQUIRE(y.at(0, 0, 0, 0) == 5.0f);
    REQUIRE(y.at(0, 0, 0, 1) == 8.0f);
    Tensor dy(1, 1, 1, 2);
    dy.data = {10, 20};
    const auto dx = pool.backward(dy);
    REQUIRE(dx.data == std::vector<float>{0, 10, 0, 0, 0, 0, 20, 0});
}

TEST_CASE("global average pooling averages each plane", "[nn]") {
    GlobalAvgPool gap;
    Tensor x(1, 2, 2, 2);
    x.data = {1, 2, 3, 4, 10, 20, 30, 40};
    const auto y = gap.forward(x, true);
    REQUIRE(y.at(0, 0, 0, 0) == Catch::Approx(2.5));
    REQUIRE(y.at(0, 1, 0, 0) == Catch::Approx(25.0));
    Tensor dy(1, 2, 1, 1);
    dy.data = {4, 8};
    const auto dx = gap.backward(dy);
    REQUIRE(dx.data == std::vector<float>{1, 1, 1, 1, 2, 2, 2, 2});
}

TEST_CASE("softmax cross-entropy matches hand arithmetic", "[nn]") {
    Tensor logits(1, 2, 1, 1);
    logits.data = {0.0f, 0.0f};
    const auto r = softmax_cross_entropy(logits, {0});
    REQUIRE(r.loss == Catch::Approx(std::log(2.0)).margin(1e-6));
    REQUIRE(r.probs[0][0] == Catch::Approx(0.5).margin(1e-6));
    REQUIRE(r.dlogits.data[0] == Catch::Approx(-0.5).margin(1e-6));
    REQUIRE(r.dlogits.data[1] == Catch::Approx(0.5).margin(1e-6));
    REQUIRE_THROWS_AS(softmax_cross_entropy(logits, {2}), IdOutOfRangeError);
    REQUIRE_THROWS_AS(softmax_cross_entropy(logits, {0, 1}), DimensionMismatchError);
}

TEST_CASE("SGD momentum follows the classical update", "[nn]") {
    Param p;
    p.resize(1);
    p.w[0] = 1.0f;
    Sgd opt{0.1f, 0.9f};
    p.g[0] = 1.0f;
    opt.step({&p});
    REQUIRE(p.v[0] == Catch::Approx(1.0f));
    REQUIRE(p.w[0] == Catch::Approx(0.9f));
    p.g[0] = 1.0f;
    opt.step({&p});
    REQUIRE(p.v[0] == Catch::Approx(1.9f));
    REQUIRE(p.w[0] == Catch::Approx(0.9f - 0.19f));
}

TEST_CASE("analytic gradients match finite differences", "[nn][slow]") {
    Network net;
    net.num_classes = 3;
    net.add("layer1.conv", std::make_unique<Conv2d>(1, 2, 3, 1, 1, false));
    net.add("layer1.bn", std::make_unique<BatchNorm2d>(2));
    net.add("layer1", std::make_unique<ReLU>());
    net.add("pool", std::make_unique<MaxPool2d>(2, 2));
    net.add("gap", std::make_unique<GlobalAvgPool>());
    net.add("fc", std::make_unique<Dense>(2, 3));
    net.init_params(11);
    Rng rng(12);
    const auto x = random_tensor(3, 1, 6, 6, rng);
    gradcheck(net, x, {0, 2, 1}, 3);
}

TEST_CASE("bottleneck residual gradients match finite differences", "[nn][slow]") {
    Network net;
    net.num_classes = 2;
    net.add("block", std::make_unique<Bottleneck>(3, 1, 2));
    net.add("gap", std::make_unique<GlobalAvgPool>());
    net.add("fc", std::make_unique<Dense>(4, 2));
    net.init_params(13);
    Rng rng(14);
    const auto x = random_tensor(2, 3, 6, 6, rng);
    gradcheck(net, x, {1, 0}, 7);
}

TEST_CASE("a zeroed bottleneck main path reduces to a rectifier", "[nn]") {
    Bottleneck block(4, 1, 1); // in == out, stride 1: identity shortcut
    for (auto* p : block.params()) std::fill(p->w.begin(), p->w.end(), 0.0f);
    Rng rng(15);
    const auto x = random_tensor(1, 4, 3, 3, rng);
    const auto y = block.forward(x, false);
    for (size_t i = 0; i < x.size(); ++i)
        REQUIRE(y.data[i] == Catch::Approx(std::max(x.data[i], 0.0f)).margin(1e-6));
}

TEST_CASE("tiny backbone wires up and exposes its attribution target", "[nn]") {
    auto net = make_backbone("tiny", 12, 21);
    REQUIRE(net.in_channels == 1);
    REQUIRE(net.has_layer("layer4"));
    REQUIRE(net.has_layer("fc"));
    REQUIRE_FALSE(net.has_layer("layer9"));
    Rng rng(22);
    const auto x = random_tensor(2, 1, 48, 48, rng);
    const auto logits = net.forward(x, false);
    REQUIRE(logits.n == 2);
    REQUIRE(logits.c == 12);
    REQUIRE(logits.h == 1);
    const auto& act = net.activation("layer4");
    REQUIRE(act.c == 64);
    REQUIRE(act.h == 6);
    REQUIRE_THROWS_AS(net.activation("nope"), LayerNotFoundError);
}

TEST_CASE("seeded initialization replays exactly", "[nn]") {
    auto a = make_backbone("tiny", 5, 77);
    auto b = make_backbone("tiny", 5, 77);
    auto c = make_backbone("tiny", 5, 78);
    const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
    bool all_equal = true, any_diff = false;
    for (size_t i = 0; i < pa.size(); ++i) {
        all_equal = all_equal && pa[i]->w == pb[i]->w;
        any_diff = any_diff || pa[i]->w != pc[i]->w;
    }
    REQUIRE(all_equal);
    REQUIRE(any_diff);
}

TEST_CASE("snapshots restore weights and running statistics", "[nn]") {
    auto net = make_backbone("tiny", 7, 31);
    Rng rng(32);
    // A few training steps so running stats and weights move off init.
    Sgd opt{0.01f, 0.9f};
    for (int step = 0; step < 3; ++step) {
        const auto x = random_tensor(4, 1, 32, 32, rng);
        net.zero_grad();
        const auto logits = net.forward(x, true);
        const auto loss = softmax_cross_entropy(logits, {0, 1, 2, 3});
        net.backward(loss.dlogits);
        opt.step(net.parameters());
    }
    std::stringstream buf;
    save_network(net, buf);
    auto restored = load_network(buf);
    REQUIRE(restored.backbone_id == "tiny");
    REQUIRE(restored.num_classes == 7);
    const auto x = random_tensor(1, 1, 32, 32, rng);
    auto y1 = net.forward(x, false);
    auto y2 = restored.forward(x, false);
    REQUIRE(y1.data == y2.data);
}

TEST_CASE("corrupt snapshots are rejected", "[nn]") {
    std::stringstream buf;
    buf << "garbage bytes";
    REQUIRE_THROWS_AS(load_network(buf), IoError);
}

TEST_CASE("unknown backbones are rejected", "[nn]") {
    REQUIRE_THROWS_AS(make_backbone("vgg99", 3, 1), ConfigError);
}

TEST_CASE("resnet101 constructs and runs a small forward pass", "[nn][slow]") {
    auto net = make_backbone("resnet101-imagenet", 4, 9);
    REQUIRE(net.in_channels == 3);
    REQUIRE(net.has_layer("layer4"));
    Rng rng(10);
    const auto x = random_tensor(1, 3, 64, 64, rng);
    const auto logits = net.forward(x, false);
    REQUIRE(logits.c == 4);
    const auto& act = net.activation("layer4");
    REQUIRE(act.c == 2048);
    REQUIRE(act.h == 2);
}
