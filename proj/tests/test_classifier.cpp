#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

#include "panelkit/classifier.hpp"
#include "panelkit/corpus.hpp"
#include "panelkit/image_io.hpp"

using namespace panelkit;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        char tmpl[] = "/tmp/panelkit-clf-XXXXXX";
        path = mkdtemp(tmpl);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

// A fold model whose logits are fixed by the head bias regardless of the
// input, so ensemble vote patterns can be scripted exactly.
FoldModel constant_prob_model(const std::vector<float>& probs) {
    FoldModel fm;
    nn::Network net;
    net.backbone_id = "oracle";
    net.num_classes = static_cast<int>(probs.size());
    net.in_channels = 1;
    net.channel_mean = {0.0f};
    net.channel_std = {1.0f};
    net.add("layer1", std::make_unique<nn::Conv2d>(1, 1, 1, 1, 0, true));
    net.add("gap", std::make_unique<nn::GlobalAvgPool>());
    net.add("fc", std::make_unique<nn::Dense>(1, net.num_classes));
    auto params = net.parameters();
    std::fill(params[0]->w.begin(), params[0]->w.end(), 0.0f); // conv weight
    std::fill(params[1]->w.begin(), params[1]->w.end(), 0.0f); // conv bias
    std::fill(params[2]->w.begin(), params[2]->w.end(), 0.0f); // fc weight
    for (size_t i = 0; i < probs.size(); ++i) params[3]->w[i] = std::log(probs[i]);
    fm.net = std::move(net);
    return fm;
}

nn::Tensor dummy_input() {
    nn::Tensor t(1, 1, 4, 4);
    std::fill(t.data.begin(), t.data.end(), 0.25f);
    return t;
}

MemoryCorpus small_corpus(uint64_t seed = 7) {
    auto corpus = generate_synthetic_corpus(default_synthetic_styles(), 10, seed);
    return MemoryCorpus(std::move(corpus), TaskKind::Title104,
                        AblationSpec{AblationMode::FrameOnly, std::nullopt});
}

// Corpus plus a matching 80/10/10 manifest; the split needs the annotations
// before they move into the data source.
struct TrainFixture {
    MemoryCorpus source;
    SplitManifest manifest;
};

TrainFixture make_fixture(uint64_t split_seed = 1) {
    auto corpus = generate_synthetic_corpus(default_synthetic_styles(), 10, 7);
    auto manifest = build_page_random_split(corpus.books, TaskKind::Title104, split_seed);
    return {MemoryCorpus(std::move(corpus), TaskKind::Title104,
                         AblationSpec{AblationMode::FrameOnly, std::nullopt}),
            std::move(manifest)};
}

TrainConfig smoke_config() {
    TrainConfig cfg;
    cfg.backbone = "tiny";
    cfg.input_size = 32;
    cfg.max_epochs = 1;
    cfg.seed = 3;
    return cfg;
}

} // namespace

TEST_CASE("learning-rate schedule decays by 10x every 30 epochs", "[classifier]") {
    const TrainConfig cfg; // recipe defaults
    CHECK(cfg.initial_lr == 0.001f);
    CHECK(cfg.momentum == 0.9f);
    CHECK(cfg.batch_size == 32);
    CHECK(cfg.max_epochs == 100);

    CHECK(cfg.lr_at_epoch(1) == Catch::Approx(0.001).epsilon(1e-6));
    CHECK(cfg.lr_at_epoch(30) == Catch::Approx(0.001).epsilon(1e-6));
    CHECK(cfg.lr_at_epoch(31) == Catch::Approx(0.0001).epsilon(1e-6));
    CHECK(cfg.lr_at_epoch(60) == Catch::Approx(0.0001).epsilon(1e-6));
    CHECK(cfg.lr_at_epoch(61) == Catch::Approx(0.00001).epsilon(1e-6));
    CHECK(cfg.lr_at_epoch(100) == Catch::Approx(0.000001).epsilon(1e-6));
}

TEST_CASE("evaluation cadence is every epoch through 30 then every 10", "[classifier]") {
    const TrainConfig cfg;
    for (int e = 1; e <= 30; ++e) CHECK(cfg.eval_due(e));
    CHECK_FALSE(cfg.eval_due(31));
    CHECK_FALSE(cfg.eval_due(39));
    CHECK(cfg.eval_due(40));
    CHECK_FALSE(cfg.eval_due(55));
    CHECK(cfg.eval_due(100));

    TrainConfig odd = cfg;
    odd.max_epochs = 37;
    CHECK(odd.eval_due(37)); // final epoch always records a point
}

TEST_CASE("train config serializes and validates", "[classifier]") {
    TrainConfig cfg;
    cfg.backbone = "tiny";
    cfg.batch_size = 16;
    cfg.seed = 99;
    cfg.select_best_on_dev = true;
    const auto j = cfg.to_json();
    const auto back = TrainConfig::from_json(j);
    CHECK(back.backbone == "tiny");
    CHECK(back.batch_size == 16);
    CHECK(back.seed == 99);
    CHECK(back.select_best_on_dev);
    CHECK(back.initial_lr == cfg.initial_lr);

    // Missing keys fall back to the recipe defaults.
    const auto sparse = TrainConfig::from_json(nlohmann::json::object());
    CHECK(sparse.batch_size == 32);
    CHECK(sparse.max_epochs == 100);
    CHECK(sparse.backbone == "resnet101-imagenet");

    nlohmann::json bad = cfg.to_json();
    bad["batch_size"] = 0;
    CHECK_THROWS_AS(TrainConfig::from_json(bad), ConfigError);
    TrainConfig negative;
    negative.initial_lr = -1.0f;
    CHECK_THROWS_AS(negative.validate(), ConfigError);
}

TEST_CASE("preprocessing resizes, replicates channels, and normalizes", "[classifier]") {
    ImageU8 page(1654, 1170, 255);
    const std::vector<float> mean{0.485f, 0.456f, 0.406f};
    const std::vector<float> std{0.229f, 0.224f, 0.225f};

    const auto t = preprocess_input(page, 224, mean, std);
    CHECK(t.n == 1);
    CHECK(t.c == 3);
    CHECK(t.h == 224);
    CHECK(t.w == 224);

    // All-white page: every position of channel c equals (1 - mean_c) / std_c.
    for (int c = 0; c < 3; ++c) {
        const float expected = (1.0f - mean[c]) / std[c];
        CHECK(t.at(0, c, 0, 0) == Catch::Approx(expected));
        CHECK(t.at(0, c, 223, 223) == Catch::Approx(expected));
        CHECK(t.at(0, c, 100, 57) == Catch::Approx(expected));
    }

    // Determinism: equal tensors on repeated calls.
    ImageU8 textured(90, 60);
    for (size_t i = 0; i < textured.px.size(); ++i) textured.px[i] = static_cast<uint8_t>(i * 7);
    const auto a = preprocess_input(textured, 48, {0.5f}, {0.5f});
    const auto b = preprocess_input(textured, 48, {0.5f}, {0.5f});
    CHECK(a.data == b.data);
    CHECK(a.c == 1);
}

TEST_CASE("memory corpus labels synthetic styles by title", "[classifier]") {
    const auto source = small_corpus();
    CHECK(source.class_count() == 12);
    const auto refs = source.all_refs();
    CHECK(refs.size() == 120);

    const PageRef ref{"grid2x2", 0};
    CHECK(source.labels().labels[source.label_of(ref)] == "grid2x2");
    const auto img = source.image_for(ref);
    CHECK(img.width == 820);
    CHECK(img.height == 580);
    // Frame-only rendering: strokes on canvas, nothing else.
    std::set<uint8_t> values(img.px.begin(), img.px.end());
    CHECK(values.size() == 2);

    CHECK_THROWS_AS(source.label_of(PageRef{"nosuch", 0}), CorpusMissingError);
    CHECK_THROWS_AS(source.image_for(PageRef{"grid2x2", 999}), CorpusMissingError);
}

TEST_CASE("directory corpus reads the rendered index", "[classifier]") {
    TempDir tmp;
    const auto mode_dir = tmp.path / "unprocessed";
    std::filesystem::create_directories(mode_dir / "BookA");
    std::filesystem::create_directories(mode_dir / "BookB");
    ImageU8 a(12, 8, 10), b(12, 8, 200);
    write_png((mode_dir / "BookA" / "0.png").string(), a);
    write_png((mode_dir / "BookB" / "3.png").string(), b);
    nlohmann::json index;
    index["items"]["BookA/0.png"] = {{"title", "BookA"}, {"page", 0}, {"label", "romance"}};
    index["items"]["BookB/3.png"] = {{"title", "BookB"}, {"page", 3}, {"label", "action"}};
    std::ofstream(mode_dir / "index.json") << index.dump();

    DirectoryCorpus corpus(tmp.path, "unprocessed");
    CHECK(corpus.class_count() == 2);
    CHECK(corpus.labels().labels == std::vector<std::string>{"action", "romance"});
    CHECK(corpus.label_of({"BookA", 0}) == 1);
    CHECK(corpus.label_of({"BookB", 3}) == 0);
    CHECK(corpus.image_for({"BookB", 3}).px[0] == 200);
    CHECK_THROWS_AS(corpus.label_of({"BookA", 1}), CorpusMissingError);
    CHECK_THROWS_AS(DirectoryCorpus(tmp.path, "masked"), CorpusMissingError);

    std::filesystem::remove(mode_dir / "BookA" / "0.png");
    CHECK_THROWS_AS(corpus.image_for({"BookA", 0}), CorpusMissingError);
}

TEST_CASE("tensor cache hands back the same preprocessed tensor", "[classifier]") {
    const auto source = small_corpus();
    const TensorCache cache(source, nn::backbone_norm("tiny"), 32);
    const PageRef ref{"grid3x3", 2};
    const auto& first = cache.get(ref);
    const auto& second = cache.get(ref);
    CHECK(&first == &second);
    CHECK(first.h == 32);
    CHECK(first.c == 1);
    const auto direct = preprocess_input(source.image_for(ref), 32, {0.5f}, {0.5f});
    CHECK(first.data == direct.data);
}

TEST_CASE("single-epoch training records one curve point and learns nothing alarming",
          "[classifier][slow]") {
    const auto [source, manifest] = make_fixture();
    const auto cfg = smoke_config();

    auto fm = train_fold(source, manifest, 0, AblationSpec{AblationMode::FrameOnly, std::nullopt},
                         cfg);
    CHECK(fm.fold == 0);
    CHECK(fm.task == TaskKind::Title104);
    CHECK(fm.mode_key == "frame_only");
    REQUIRE(fm.curve.size() == 1);
    CHECK(fm.curve[0].epoch == 1);
    CHECK(fm.curve[0].train_loss > 0.0f);
    CHECK(fm.curve[0].train_accuracy >= 0.0f);
    CHECK(fm.curve[0].train_accuracy <= 1.0f);
    CHECK(fm.curve[0].val_accuracy >= 0.0f);
    CHECK(fm.curve[0].val_accuracy <= 1.0f);

    CHECK_THROWS_AS(train_fold(source, manifest, 5,
                               AblationSpec{AblationMode::FrameOnly, std::nullopt}, cfg),
                    ConfigError);
}

TEST_CASE("training replays exactly under one seed and moves under another",
          "[classifier][slow]") {
    const auto [source, manifest] = make_fixture();
    const auto cfg = smoke_config();
    const AblationSpec spec{AblationMode::FrameOnly, std::nullopt};

    auto a = train_fold(source, manifest, 1, spec, cfg);
    auto b = train_fold(source, manifest, 1, spec, cfg);
    REQUIRE(!a.curve.empty());
    CHECK(a.curve[0].train_loss == b.curve[0].train_loss);
    CHECK(a.curve[0].val_accuracy == b.curve[0].val_accuracy);

    auto cfg2 = cfg;
    cfg2.seed = 4;
    auto c = train_fold(source, manifest, 1, spec, cfg2);
    CHECK(a.curve[0].train_loss != c.curve[0].train_loss);
}

TEST_CASE("pretrained weights must match backbone and head", "[classifier][slow]") {
    const auto [source, manifest] = make_fixture();
    TempDir tmp;

    auto cfg = smoke_config();
    const AblationSpec spec{AblationMode::FrameOnly, std::nullopt};

    {
        auto three_way = nn::make_backbone("tiny", 3, 0);
        std::ofstream out(tmp.path / "three.bin", std::ios::binary);
        nn::save_network(three_way, out);
    }
    cfg.weights_path = (tmp.path / "three.bin").string();
    CHECK_THROWS_AS(train_fold(source, manifest, 0, spec, cfg), ClassCountMismatchError);

    cfg.weights_path = (tmp.path / "missing.bin").string();
    CHECK_THROWS_AS(train_fold(source, manifest, 0, spec, cfg), IoError);

    // Matching snapshot: training resumes from it without complaint.
    {
        auto twelve = nn::make_backbone("tiny", 12, 5);
        std::ofstream out(tmp.path / "twelve.bin", std::ios::binary);
        nn::save_network(twelve, out);
    }
    cfg.weights_path = (tmp.path / "twelve.bin").string();
    auto fm = train_fold(source, manifest, 0, spec, cfg);
    CHECK(fm.curve.size() == 1);
}

TEST_CASE("unanimous ensembles need no tie-break", "[classifier]") {
    std::vector<FoldModel> models;
    for (int i = 0; i < 5; ++i) models.push_back(constant_prob_model({0.1f, 0.2f, 0.7f}));
    const auto p = predict_ensemble(models, dummy_input());
    CHECK(p.final_class == 2);
    CHECK_FALSE(p.tie_broken);
    CHECK(p.votes == std::vector<int>{2, 2, 2, 2, 2});
    REQUIRE(p.model_probs.size() == 5);
    CHECK(p.model_probs[0][2] == Catch::Approx(0.7).epsilon(1e-5));
}

TEST_CASE("plurality ties resolve by summed probability", "[classifier]") {
    // Votes [a, a, b, b, c]; class masses sum to a = 1.9 and b = 2.1 (model
    // 4 splits its remaining mass 0.3/0.7 between a and c), so b wins.
    std::vector<FoldModel> models;
    models.push_back(constant_prob_model({0.50f, 0.45f, 0.05f}));
    models.push_back(constant_prob_model({0.50f, 0.45f, 0.05f}));
    models.push_back(constant_prob_model({0.30f, 0.60f, 0.10f}));
    models.push_back(constant_prob_model({0.30f, 0.60f, 0.10f}));
    models.push_back(constant_prob_model({0.30f, 0.000001f, 0.699999f}));

    const auto p = predict_ensemble(models, dummy_input());
    CHECK(p.votes == std::vector<int>{0, 0, 1, 1, 2});
    CHECK(p.final_class == 1);
    CHECK(p.tie_broken);
}

TEST_CASE("exactly tied probability mass falls back to the lowest class id", "[classifier]") {
    // Classes 0 and 1 receive two votes each and the same summed mass (the
    // vote-pattern is mirrored), so the documented total order picks 0.
    std::vector<FoldModel> models;
    models.push_back(constant_prob_model({0.50f, 0.40f, 0.10f}));
    models.push_back(constant_prob_model({0.50f, 0.40f, 0.10f}));
    models.push_back(constant_prob_model({0.40f, 0.50f, 0.10f}));
    models.push_back(constant_prob_model({0.40f, 0.50f, 0.10f}));
    models.push_back(constant_prob_model({0.15f, 0.15f, 0.70f}));

    const auto p = predict_ensemble(models, dummy_input());
    CHECK(p.votes == std::vector<int>{0, 0, 1, 1, 2});
    CHECK(p.final_class == 0);
    CHECK(p.tie_broken);
}

TEST_CASE("uniform model probabilities resolve to class 0", "[classifier]") {
    std::vector<FoldModel> models;
    for (int i = 0; i < 5; ++i)
        models.push_back(constant_prob_model({1.0f / 3, 1.0f / 3, 1.0f / 3}));
    const auto p = predict_ensemble(models, dummy_input());
    CHECK(p.final_class == 0);
}

TEST_CASE("ensemble decision is invariant under per-model logit shifts", "[classifier]") {
    std::vector<FoldModel> models;
    models.push_back(constant_prob_model({0.50f, 0.45f, 0.05f}));
    models.push_back(constant_prob_model({0.10f, 0.80f, 0.10f}));
    models.push_back(constant_prob_model({0.30f, 0.60f, 0.10f}));
    models.push_back(constant_prob_model({0.25f, 0.50f, 0.25f}));
    models.push_back(constant_prob_model({0.70f, 0.20f, 0.10f}));
    const auto before = predict_ensemble(models, dummy_input());

    // Adding a constant to every logit of a model rescales its probability
    // vector's unnormalized mass; softmax cancels it exactly.
    for (size_t m = 0; m < models.size(); ++m) {
        auto params = models[m].net.parameters();
        for (auto& w : params.back()->w) w += static_cast<float>(m) * 2.5f;
    }
    const auto after = predict_ensemble(models, dummy_input());
    CHECK(before.final_class == after.final_class);
    CHECK(before.votes == after.votes);
    for (size_t m = 0; m < models.size(); ++m)
        for (size_t c = 0; c < 3; ++c)
            CHECK(before.model_probs[m][c] == Catch::Approx(after.model_probs[m][c]).margin(1e-5));
}

TEST_CASE("single-class ensembles always return that class", "[classifier]") {
    std::vector<FoldModel> models;
    for (int i = 0; i < 5; ++i) models.push_back(constant_prob_model({1.0f}));
    const auto p = predict_ensemble(models, dummy_input());
    CHECK(p.final_class == 0);
    CHECK_FALSE(p.tie_broken);
}

TEST_CASE("mismatched ensembles are rejected", "[classifier]") {
    std::vector<FoldModel> empty;
    CHECK_THROWS_AS(predict_ensemble(empty, dummy_input()), ConfigError);

    std::vector<FoldModel> models;
    for (int i = 0; i < 5; ++i) models.push_back(constant_prob_model({0.5f, 0.5f}));
    models[3].mode_key = "masked";
    CHECK_THROWS_AS(predict_ensemble(models, dummy_input()), ModelTaskMismatchError);

    models[3].mode_key = models[0].mode_key;
    models[3].task = TaskKind::Publisher;
    models[0].task = TaskKind::Genre;
    CHECK_THROWS_AS(predict_ensemble(models, dummy_input()), ModelTaskMismatchError);
}

TEST_CASE("fold snapshots round-trip through the run directory", "[classifier][slow]") {
    const auto [source, manifest] = make_fixture();
    auto fm = train_fold(source, manifest, 2, AblationSpec{AblationMode::FrameOnly, std::nullopt},
                         smoke_config());

    TempDir tmp;
    save_fold(tmp.path, fm, {{"config_hash", "deadbeef"}, {"seed", 3}});
    CHECK(std::filesystem::exists(tmp.path / "fold2" / "model.bin"));
    CHECK(std::filesystem::exists(tmp.path / "fold2" / "metadata.json"));

    {
        std::ifstream in(tmp.path / "fold2" / "metadata.json");
        nlohmann::json meta;
        in >> meta;
        CHECK(meta.at("config_hash") == "deadbeef");
        CHECK(meta.at("fold") == 2);
        CHECK(meta.at("task") == "title");
        CHECK(meta.at("mode") == "frame_only");
        CHECK(meta.at("curve").size() == fm.curve.size());
    }

    auto loaded = load_fold(tmp.path, 2);
    CHECK(loaded.fold == 2);
    CHECK(loaded.task == fm.task);
    CHECK(loaded.mode_key == fm.mode_key);
    REQUIRE(loaded.curve.size() == fm.curve.size());
    CHECK(loaded.curve[0].val_accuracy == fm.curve[0].val_accuracy);

    const TensorCache cache(source, fm.net, 32);
    const auto& input = cache.get(manifest.test.front());
    CHECK(fm.predict_probs(input) == loaded.predict_probs(input));

    CHECK_THROWS_AS(load_fold(tmp.path, 4), IoError);
}
