#pragma once

// Experiment configuration document and the end-to-end runner: resolve the
// data source and split, train the five fold models (shared tensor cache),
// ensemble the test set, and write the report directory.

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "panelkit/classifier.hpp"
#include "panelkit/corpus.hpp"
#include "panelkit/corpus_dir.hpp"
#include "panelkit/eval.hpp"
#include "panelkit/image_io.hpp"
#include "panelkit/plot.hpp"
#include "panelkit/render.hpp"

namespace panelkit {

// --------------------------------------------------------------------------
// JSON (de)serialization for the small configuration value types
// --------------------------------------------------------------------------

inline nlohmann::json noise_to_json(const NoiseSpec& n) {
    return {{"family", to_string(n.family)}, {"range", n.range}, {"seed", n.seed}};
}

inline NoiseSpec noise_from_json(const nlohmann::json& j) {
    NoiseSpec n;
    const auto family = j.at("family").get<std::string>();
    if (family == "rectangular")
        n.family = NoiseFamily::Rectangular;
    else if (family == "quadrilateral")
        n.family = NoiseFamily::Quadrilateral;
    else
        throw ConfigError("unknown noise family '" + family + "'");
    n.range = j.at("range").get<int>();
    if (n.range < 0) throw ConfigError("noise range must be >= 0");
    n.seed = j.value("seed", uint64_t{0});
    return n;
}

inline nlohmann::json ablation_to_json(const AblationSpec& spec) {
    nlohmann::json j{{"mode", to_string(spec.mode)}};
    if (spec.noise) j["noise"] = noise_to_json(*spec.noise);
    return j;
}

inline AblationSpec ablation_from_json(const nlohmann::json& j) {
    AblationSpec spec;
    const auto mode = j.at("mode").get<std::string>();
    const auto parsed = ablation_mode_from(mode);
    if (!parsed) throw ConfigError("unknown ablation mode '" + mode + "'");
    spec.mode = *parsed;
    if (j.contains("noise") && !j.at("noise").is_null())
        spec.noise = noise_from_json(j.at("noise"));
    return spec;
}

inline nlohmann::json render_config_to_json(const RenderConfig& r) {
    return {{"mask_fill", r.mask_fill},
            {"stroke_value", r.stroke_value},
            {"stroke_width", r.stroke_width},
            {"canvas_value", r.canvas_value}};
}

inline RenderConfig render_config_from_json(const nlohmann::json& j) {
    RenderConfig r;
    r.mask_fill = static_cast<uint8_t>(j.value("mask_fill", int{r.mask_fill}));
    r.stroke_value = static_cast<uint8_t>(j.value("stroke_value", int{r.stroke_value}));
    r.stroke_width = j.value("stroke_width", r.stroke_width);
    r.canvas_value = static_cast<uint8_t>(j.value("canvas_value", int{r.canvas_value}));
    if (r.stroke_width < 1) throw ConfigError("stroke_width must be >= 1");
    return r;
}

// --------------------------------------------------------------------------
// Experiment configuration
// --------------------------------------------------------------------------

// Where training images come from: the built-in synthetic layout corpus or a
// rendered corpus directory written by the `render`/`synth` tools.
struct CorpusSpec {
    // synthetic: built-in layout generator, in memory.
    // raw:       annotation+image directory, ablations rendered on the fly.
    // rendered:  pre-rendered image tree written by the render tool.
    enum class Kind { Synthetic, Raw, Rendered } kind = Kind::Synthetic;
    int pages_per_style = 100;  // synthetic only
    uint64_t seed = 7;          // synthetic only
    std::filesystem::path root; // raw / rendered only

    nlohmann::json to_json() const {
        if (kind == Kind::Synthetic)
            return {{"kind", "synthetic"}, {"pages_per_style", pages_per_style}, {"seed", seed}};
        return {{"kind", kind == Kind::Raw ? "raw" : "rendered"}, {"root", root.string()}};
    }

    static CorpusSpec from_json(const nlohmann::json& j) {
        CorpusSpec c;
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "synthetic") {
            c.kind = Kind::Synthetic;
            c.pages_per_style = j.value("pages_per_style", c.pages_per_style);
            c.seed = j.value("seed", c.seed);
        } else if (kind == "raw" || kind == "rendered") {
            c.kind = kind == "raw" ? Kind::Raw : Kind::Rendered;
            c.root = j.at("root").get<std::string>();
        } else {
            throw ConfigError("unknown corpus kind '" + kind + "'");
        }
        return c;
    }
};

struct ExperimentConfig {
    std::string experiment_id = "experiment";
    TaskKind task = TaskKind::Title104;
    AblationSpec ablation{AblationMode::FrameOnly, std::nullopt};
    RenderConfig render;
    TrainConfig train;
    SplitProtocol protocol = SplitProtocol::PageRandom;
    uint64_t split_seed = 0;
    std::filesystem::path manifest_path; // optional precomputed split manifest
    CorpusSpec corpus;
    std::filesystem::path output_dir = "runs";

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["experiment_id"] = experiment_id;
        j["task"] = to_string(task);
        j["ablation"] = ablation_to_json(ablation);
        j["render"] = render_config_to_json(render);
        j["train"] = train.to_json();
        j["protocol"] = to_string(protocol);
        j["split_seed"] = split_seed;
        j["manifest_path"] = manifest_path.string();
        j["corpus"] = corpus.to_json();
        j["output_dir"] = output_dir.string();
        return j;
    }

    static ExperimentConfig from_json(const nlohmann::json& j) {
        ExperimentConfig c;
        c.experiment_id = j.value("experiment_id", c.experiment_id);
        if (c.experiment_id.empty() || c.experiment_id.find('/') != std::string::npos)
            throw ConfigError("experiment_id must be a non-empty path-free name");
        if (j.contains("task")) {
            const auto t = task_from(j.at("task").get<std::string>());
            if (!t) throw ConfigError("unknown task '" + j.at("task").get<std::string>() + "'");
            c.task = *t;
        }
        if (j.contains("ablation")) c.ablation = ablation_from_json(j.at("ablation"));
        if (j.contains("render")) c.render = render_config_from_json(j.at("render"));
        if (j.contains("train")) c.train = TrainConfig::from_json(j.at("train"));
        if (j.contains("protocol")) {
            const auto p = j.at("protocol").get<std::string>();
            if (p == "page_random")
                c.protocol = SplitProtocol::PageRandom;
            else if (p == "leave_one_work_out")
                c.protocol = SplitProtocol::LeaveOneWorkOut;
            else
                throw ConfigError("unknown protocol '" + p + "'");
        }
        c.split_seed = j.value("split_seed", c.split_seed);
        c.manifest_path = j.value("manifest_path", std::string{});
        if (j.contains("corpus")) c.corpus = CorpusSpec::from_json(j.at("corpus"));
        c.output_dir = j.value("output_dir", c.output_dir.string());
        return c;
    }
};

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open experiment config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("malformed experiment config " + path.string() + ": " + e.what());
    }
    return ExperimentConfig::from_json(j);
}

// FNV-derived hash of the canonical config document; recorded in fold
// metadata and reports so runs can be traced back to their exact settings.
inline std::string config_hash(const ExperimentConfig& cfg) {
    const uint64_t h = derive_seed(0x9e3779b97f4a7c15ULL, cfg.to_json().dump());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// --------------------------------------------------------------------------
// Setup: data source + split manifest
// --------------------------------------------------------------------------

struct ExperimentSetup {
    std::shared_ptr<DataSource> source;
    SplitManifest manifest;
};

inline SplitManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());
    nlohmann::json j;
    in >> j;
    return SplitManifest::from_json(j);
}

inline ExperimentSetup prepare_experiment(const ExperimentConfig& cfg) {
    ExperimentSetup setup;
    if (cfg.corpus.kind == CorpusSpec::Kind::Synthetic) {
        auto corpus = generate_synthetic_corpus(default_synthetic_styles(),
                                                cfg.corpus.pages_per_style, cfg.corpus.seed);
        if (!cfg.manifest_path.empty()) {
            setup.manifest = load_manifest(cfg.manifest_path);
        } else if (cfg.protocol == SplitProtocol::PageRandom) {
            setup.manifest = build_page_random_split(corpus.books, cfg.task, cfg.split_seed);
        } else {
            setup.manifest = build_leave_one_work_out(corpus.books, cfg.task, cfg.split_seed);
        }
        setup.source = std::make_shared<MemoryCorpus>(std::move(corpus), cfg.task, cfg.ablation,
                                                      cfg.render);
    } else if (cfg.corpus.kind == CorpusSpec::Kind::Raw) {
        auto raw = std::make_shared<RawCorpus>(cfg.corpus.root, cfg.task, cfg.ablation,
                                               cfg.render);
        if (!cfg.manifest_path.empty()) {
            setup.manifest = load_manifest(cfg.manifest_path);
        } else if (cfg.protocol == SplitProtocol::PageRandom) {
            setup.manifest = build_page_random_split(raw->books(), cfg.task, cfg.split_seed);
        } else {
            setup.manifest = build_leave_one_work_out(raw->books(), cfg.task, cfg.split_seed);
        }
        setup.source = std::move(raw);
    } else {
        if (cfg.manifest_path.empty())
            throw ConfigError("rendered corpora need a manifest_path (run the split tool first)");
        setup.manifest = load_manifest(cfg.manifest_path);
        setup.source =
            std::make_shared<DirectoryCorpus>(cfg.corpus.root, cfg.ablation.dir_name());
    }
    if (setup.manifest.task != cfg.task)
        throw ConfigError("manifest task does not match experiment task");
    return setup;
}

// --------------------------------------------------------------------------
// Report directory
// --------------------------------------------------------------------------

inline void write_report_dir(const std::filesystem::path& report_dir, const EvalReport& report,
                             const std::vector<FoldModel>& folds) {
    std::filesystem::create_directories(report_dir);
    {
        std::ofstream out(report_dir / "metrics.json");
        out << report.to_json().dump(2) << "\n";
        if (!out) throw IoError("failed to write metrics.json");
    }
    {
        std::ofstream out(report_dir / "table.csv");
        out << render_table_csv({report});
    }
    {
        std::ofstream out(report_dir / "table.txt");
        out << render_table_text({report});
        out << "\n" << render_class_table(report);
    }
    {
        std::ofstream out(report_dir / "confusion.csv");
        out << render_confusion_csv(report);
    }
    if (!folds.empty()) {
        const auto figure = render_curve_figure(aggregate_curves(folds));
        write_png((report_dir / "curves.png").string(), figure);
    }
}

// --------------------------------------------------------------------------
// Runner
// --------------------------------------------------------------------------

struct ExperimentResult {
    std::filesystem::path run_dir;
    SplitManifest manifest;
    std::vector<FoldModel> folds;
    EvalReport report;
};

inline EvalReport evaluate_on_refs(std::vector<FoldModel>& folds, const DataSource& source,
                                   const TensorCache& cache, const std::vector<PageRef>& refs) {
    std::vector<std::pair<int, EnsemblePrediction>> predictions;
    predictions.reserve(refs.size());
    for (const auto& ref : refs)
        predictions.emplace_back(source.label_of(ref), predict_ensemble(folds, cache.get(ref)));
    EvalReport report = evaluate(predictions, source.class_count());
    report.class_labels = source.labels().labels;
    return report;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
    auto setup = prepare_experiment(cfg);
    const auto& source = *setup.source;
    const auto run_dir = cfg.output_dir / cfg.experiment_id;
    std::filesystem::create_directories(run_dir);
    const std::string hash = config_hash(cfg);

    {
        std::ofstream out(run_dir / "config.json");
        out << cfg.to_json().dump(2) << "\n";
        std::ofstream mout(run_dir / "manifest.json");
        mout << setup.manifest.to_json().dump(2) << "\n";
    }

    // One preprocessed-tensor cache shared by all five folds and the final
    // ensemble pass; rendering and resizing dominate small-scale runs.
    const TensorCache cache(source, nn::backbone_norm(cfg.train.backbone), cfg.train.input_size);

    ExperimentResult result;
    result.run_dir = run_dir;
    result.manifest = setup.manifest;
    for (int fold = 0; fold < 5; ++fold) {
        if (log) *log << "[panelkit] training fold " << fold << "\n";
        auto fm = train_fold(source, setup.manifest, fold, cfg.ablation, cfg.train, &cache);
        nlohmann::json meta{{"config_hash", hash}, {"seed", cfg.train.seed}};
        if (!fm.curve.empty()) {
            const auto& last = fm.curve.back();
            meta["final_metrics"] = {{"epoch", last.epoch},
                                     {"train_loss", last.train_loss},
                                     {"train_accuracy", last.train_accuracy},
                                     {"val_accuracy", last.val_accuracy}};
        }
        save_fold(run_dir, fm, meta);
        result.folds.push_back(std::move(fm));
        if (log && !result.folds.back().curve.empty())
            *log << "[panelkit]   fold " << fold
                 << " val accuracy " << result.folds.back().curve.back().val_accuracy << "\n";
    }

    result.report = evaluate_on_refs(result.folds, source, cache, setup.manifest.test);
    result.report.task = cfg.task;
    result.report.mode_key = cfg.ablation.dir_name();
    if (cfg.ablation.noise) {
        result.report.noise_family = to_string(cfg.ablation.noise->family);
        result.report.noise_range = cfg.ablation.noise->range;
    }
    result.report.manifest_ref =
        cfg.manifest_path.empty() ? (run_dir / "manifest.json").string() : cfg.manifest_path.string();
    result.report.config_hash = hash;
    write_report_dir(run_dir / "report", result.report, result.folds);
    if (log)
        *log << "[panelkit] test accuracy " << result.report.accuracy << " over "
             << result.report.n_items << " pages\n";
    return result;
}

} // namespace panelkit
