// panelkit command-line front end.
//
// Subcommands cover the whole pipeline: corpus validation, synthetic corpus
// generation, ablation rendering, split construction, fold training, ensemble
// prediction, report generation, Grad-CAM explanation, and cross-run tables.

#include <CLI11.hpp>

#include <panelkit/annotation.hpp>
#include <panelkit/classifier.hpp>
#include <panelkit/corpus.hpp>
#include <panelkit/corpus_dir.hpp>
#include <panelkit/errors.hpp>
#include <panelkit/eval.hpp>
#include <panelkit/experiment.hpp>
#include <panelkit/gradcam.hpp>
#include <panelkit/image_io.hpp>
#include <panelkit/render.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace panelkit;

namespace {

// ---------------------------------------------------------------------------
// Shared option plumbing
// ---------------------------------------------------------------------------

TaskKind parse_task(const std::string& s) {
    const auto t = task_from(s);
    if (!t) throw ConfigError("unknown task '" + s + "' (title|four_panel|publisher|genre)");
    return *t;
}

AblationMode parse_mode(const std::string& s) {
    const auto m = ablation_mode_from(s);
    if (!m) throw ConfigError("unknown mode '" + s + "' (unprocessed|masked|frame_only)");
    return *m;
}

NoiseFamily parse_family(const std::string& s) {
    if (s == "rectangular") return NoiseFamily::Rectangular;
    if (s == "quadrilateral") return NoiseFamily::Quadrilateral;
    throw ConfigError("unknown noise family '" + s + "' (rectangular|quadrilateral)");
}

struct ConfigOverrides {
    std::string config_path;
    std::string run_dir;     // explicit run directory (else output_dir/experiment_id)
    std::string mode;        // ablation mode override
    std::string task;        // task override
    int fold = -1;           // restrict to one fold
};

void add_override_options(CLI::App* cmd, ConfigOverrides& o, bool need_config) {
    auto* cfg = cmd->add_option("--config", o.config_path, "experiment config JSON");
    if (need_config) cfg->required();
    cmd->add_option("--run", o.run_dir, "run directory (default <output_dir>/<experiment-id>)");
    cmd->add_option("--mode", o.mode, "ablation mode override (unprocessed|masked|frame_only)");
    cmd->add_option("--task", o.task, "task override (title|four_panel|publisher|genre)");
    cmd->add_option("--fold", o.fold, "restrict to a single fold (0-4)")
        ->check(CLI::Range(0, 4));
}

// Resolve the config for commands that accept either --config or a run
// directory containing a stored config.json.
ExperimentConfig resolve_config(const ConfigOverrides& o) {
    fs::path path;
    if (!o.config_path.empty()) {
        path = o.config_path;
    } else if (!o.run_dir.empty()) {
        path = fs::path(o.run_dir) / "config.json";
    } else {
        throw ConfigError("pass --config or --run");
    }
    ExperimentConfig cfg = load_experiment_config(path);
    if (!o.task.empty()) cfg.task = parse_task(o.task);
    if (!o.mode.empty()) {
        cfg.ablation.mode = parse_mode(o.mode);
        if (cfg.ablation.mode != AblationMode::FrameOnly) cfg.ablation.noise.reset();
    }
    return cfg;
}

fs::path resolve_run_dir(const ConfigOverrides& o, const ExperimentConfig& cfg) {
    if (!o.run_dir.empty()) return o.run_dir;
    return cfg.output_dir / cfg.experiment_id;
}

// Use the stored manifest when a run directory already has one, so evaluate /
// predict / explain see exactly the split the folds were trained on.
ExperimentSetup setup_for(ExperimentConfig cfg, const fs::path& run_dir) {
    const fs::path stored = run_dir / "manifest.json";
    if (fs::exists(stored)) cfg.manifest_path = stored;
    return prepare_experiment(cfg);
}

std::vector<FoldModel> load_folds(const fs::path& run_dir, int only_fold) {
    std::vector<FoldModel> folds;
    if (only_fold >= 0) {
        folds.push_back(load_fold(run_dir, only_fold));
    } else {
        for (int k = 0; k < 5; ++k) folds.push_back(load_fold(run_dir, k));
    }
    return folds;
}

std::string sanitize_ref(const std::string& ref) {
    std::string out = ref;
    for (auto& c : out)
        if (c == '/' || c == '\\' || c == ' ') c = '_';
    return out;
}

void fill_report_context(EvalReport& report, const ExperimentConfig& cfg,
                         const SplitManifest& manifest) {
    report.task = cfg.task;
    report.mode_key = cfg.ablation.dir_name();
    if (cfg.ablation.noise && cfg.ablation.noise->range > 0) {
        report.noise_family = to_string(cfg.ablation.noise->family);
        report.noise_range = cfg.ablation.noise->range;
    }
    report.manifest_ref = cfg.manifest_path.empty() ? to_string(manifest.protocol)
                                                    : cfg.manifest_path.string();
    report.config_hash = config_hash(cfg);
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

int cmd_validate(const std::string& corpus_dir, const std::vector<std::string>& files,
                 bool strict_warnings) {
    int errors = 0, warnings = 0;

    struct Doc {
        std::string name;
        fs::path path;
        PageDims dims;
    };
    std::vector<Doc> docs;
    MetadataMap metadata;

    if (!corpus_dir.empty()) {
        const fs::path root = corpus_dir;
        metadata = corpus_metadata(root);
        for (const auto& file : annotation_files(root))
            docs.push_back({file.stem().string(), file, image_dims_for(root, file.stem().string())});
    }
    for (const auto& f : files) docs.push_back({fs::path(f).stem().string(), f, {}});
    if (docs.empty()) {
        std::cerr << "validate: pass --corpus or annotation files\n";
        return 2;
    }

    std::set<std::string> seen_titles;
    for (const auto& doc : docs) {
        std::ifstream in(doc.path);
        if (!in) {
            std::cout << doc.name << "\tpage=-\tregion=-\tio\tcannot open " << doc.path.string()
                      << "\n";
            ++errors;
            continue;
        }
        std::stringstream buf;
        buf << in.rdbuf();
        ParsedBook parsed;
        try {
            parsed = parse_book_lenient(buf.str(), doc.dims, metadata);
        } catch (const Error& e) {
            std::cout << doc.name << "\tpage=-\tregion=-\tschema\t" << e.what() << "\n";
            ++errors;
            continue;
        }
        seen_titles.insert(parsed.book.title);
        for (const auto& issue : parsed.issues) {
            std::cout << doc.name << "\tpage=" << issue.page_index << "\tregion="
                      << (issue.region_id.empty() ? "-" : issue.region_id) << "\t"
                      << to_string(issue.kind) << "\t" << issue.message << "\n";
            if (issue.is_warning())
                ++warnings;
            else
                ++errors;
        }
        if (!metadata.empty() && !metadata.count(parsed.book.title)) {
            std::cout << doc.name << "\tpage=-\tregion=-\tmetadata\ttitle '" << parsed.book.title
                      << "' missing from metadata.csv\n";
            ++errors;
        }
    }
    for (const auto& [title, meta] : metadata) {
        (void)meta;
        if (!corpus_dir.empty() && !seen_titles.count(title)) {
            std::cout << title << "\tpage=-\tregion=-\tmetadata\tmetadata row has no annotation"
                      << " document\n";
            ++warnings;
        }
    }

    std::cout << "validated " << docs.size() << " document(s): " << errors << " error(s), "
              << warnings << " warning(s)\n";
    if (errors > 0) return 1;
    return strict_warnings && warnings > 0 ? 1 : 0;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

int cmd_synth(const std::string& out_dir, int pages_per_style, uint64_t seed) {
    const auto corpus =
        generate_synthetic_corpus(default_synthetic_styles(), pages_per_style, seed);
    write_raw_corpus(out_dir, corpus);
    size_t n_pages = 0;
    for (const auto& book : corpus.books) n_pages += book.pages.size();
    std::cout << "wrote " << corpus.books.size() << " book(s), " << n_pages << " page(s) to "
              << out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// render
// ---------------------------------------------------------------------------

int cmd_render(const std::string& corpus_dir, const std::string& out_dir, const AblationSpec& spec,
               const RenderConfig& render_cfg, TaskKind task) {
    const fs::path root = corpus_dir;
    const auto books = load_raw_books(root, /*with_dims=*/false);
    const std::string mode_dir = spec.dir_name();
    const fs::path out_root = fs::path(out_dir) / mode_dir;
    fs::create_directories(out_root);

    json items = json::object();
    size_t n_pages = 0;
    for (const auto& book : books) {
        if (!book_in_task(book, task)) continue;
        const std::string label = class_label_of(book, task);
        fs::create_directories(out_root / book.title);
        for (const auto& page : book.pages) {
            if (!page.has_frames()) continue;
            ImageU8 raster = spec.mode == AblationMode::FrameOnly
                                 ? ImageU8(page.width, page.height, render_cfg.canvas_value)
                                 : read_image_gray(page_image_path(root, book.title, page.index));
            const auto rendered = render_page(raster, page, spec, render_cfg, book.title);
            const std::string rel = book.title + "/" + std::to_string(page.index) + ".png";
            write_png(out_root / rel, rendered.pixels);
            items[rel] = {{"title", book.title}, {"page", page.index}, {"label", label}};
            ++n_pages;
        }
    }
    json index{{"mode", mode_dir}, {"task", to_string(task)}, {"items", items}};
    std::ofstream out(out_root / "index.json");
    out << index.dump(2) << "\n";
    if (!out) throw IoError("failed to write index.json");
    std::cout << "rendered " << n_pages << " page(s) to " << out_root.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// split
// ---------------------------------------------------------------------------

int cmd_split(const std::string& corpus_dir, TaskKind task, const std::string& protocol,
              uint64_t seed, const std::string& out_file) {
    const auto books = load_raw_books(corpus_dir, /*with_dims=*/false);
    SplitManifest manifest;
    if (protocol == "page_random")
        manifest = build_page_random_split(books, task, seed);
    else if (protocol == "leave_one_work_out")
        manifest = build_leave_one_work_out(books, task, seed);
    else
        throw ConfigError("unknown protocol '" + protocol +
                          "' (page_random|leave_one_work_out)");

    std::ofstream out(out_file);
    if (!out) throw IoError("cannot write " + out_file);
    out << manifest.to_json().dump(2) << "\n";
    std::cout << "split " << to_string(task) << "/" << protocol << ": train "
              << manifest.train_size() << ", dev " << manifest.dev.size() << ", test "
              << manifest.test.size() << " -> " << out_file << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

int cmd_train(const ConfigOverrides& o) {
    ExperimentConfig cfg = resolve_config(o);
    const fs::path run_dir = resolve_run_dir(o, cfg);

    if (o.fold < 0) {
        const auto result = run_experiment(cfg, &std::cout);
        std::cout << render_table_text(std::vector<EvalReport>{result.report});
        return 0;
    }

    // Single-fold training still records config + manifest so later folds and
    // the evaluate/predict/explain commands can join the same run directory.
    const ExperimentSetup setup = setup_for(cfg, run_dir);
    fs::create_directories(run_dir);
    {
        std::ofstream out(run_dir / "config.json");
        out << cfg.to_json().dump(2) << "\n";
        std::ofstream mout(run_dir / "manifest.json");
        mout << setup.manifest.to_json().dump(2) << "\n";
    }
    const TensorCache cache(*setup.source, nn::backbone_norm(cfg.train.backbone),
                            cfg.train.input_size);
    std::cout << "[panelkit] training fold " << o.fold << "\n";
    FoldModel fm =
        train_fold(*setup.source, setup.manifest, o.fold, cfg.ablation, cfg.train, &cache);
    json metadata{{"config_hash", config_hash(cfg)}, {"seed", cfg.train.seed}};
    if (!fm.curve.empty()) {
        const auto& last = fm.curve.back();
        metadata["final_metrics"] = {{"epoch", last.epoch},
                                     {"train_loss", last.train_loss},
                                     {"train_accuracy", last.train_accuracy},
                                     {"val_accuracy", last.val_accuracy}};
    }
    save_fold(run_dir, fm, metadata);
    std::cout << "fold " << o.fold << " saved to " << fold_dir(run_dir, o.fold).string()
              << " (final val accuracy "
              << (fm.curve.empty() ? 0.0f : fm.curve.back().val_accuracy) << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

int cmd_predict(const ConfigOverrides& o, const std::string& image_ref,
                const std::string& image_path) {
    ExperimentConfig cfg = resolve_config(o);
    const fs::path run_dir = resolve_run_dir(o, cfg);
    const ExperimentSetup setup = setup_for(cfg, run_dir);
    auto folds = load_folds(run_dir, o.fold);

    nn::Tensor input;
    std::string ref_str;
    if (!image_ref.empty()) {
        const PageRef ref = PageRef::parse(image_ref);
        input = preprocess_input(setup.source->image_for(ref), cfg.train.input_size,
                                 folds.front().net.channel_mean, folds.front().net.channel_std);
        ref_str = ref.str();
    } else if (!image_path.empty()) {
        input = preprocess_input(read_image_gray(image_path), cfg.train.input_size,
                                 folds.front().net.channel_mean, folds.front().net.channel_std);
        ref_str = image_path;
    } else {
        throw ConfigError("pass --image-ref or --image");
    }

    const EnsemblePrediction pred = predict_ensemble(folds, input);
    json out{{"image", ref_str},
             {"final_class", pred.final_class},
             {"final_label", setup.source->labels().labels.at(pred.final_class)},
             {"tie_broken", pred.tie_broken},
             {"votes", pred.votes},
             {"model_probs", pred.model_probs}};
    if (!image_ref.empty()) {
        const int truth = setup.source->label_of(PageRef::parse(image_ref));
        out["true_class"] = truth;
        out["true_label"] = setup.source->labels().labels.at(truth);
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

int cmd_evaluate(const ConfigOverrides& o, const std::string& on, const std::string& out_dir) {
    ExperimentConfig cfg = resolve_config(o);
    const fs::path run_dir = resolve_run_dir(o, cfg);
    const ExperimentSetup setup = setup_for(cfg, run_dir);
    auto folds = load_folds(run_dir, o.fold);

    const std::vector<PageRef>* refs = nullptr;
    if (on == "test")
        refs = &setup.manifest.test;
    else if (on == "dev")
        refs = &setup.manifest.dev;
    else
        throw ConfigError("--on must be test or dev");

    const TensorCache cache(*setup.source, nn::backbone_norm(cfg.train.backbone),
                            cfg.train.input_size);
    EvalReport report = evaluate_on_refs(folds, *setup.source, cache, *refs);
    fill_report_context(report, cfg, setup.manifest);

    fs::path report_dir;
    if (!out_dir.empty()) {
        report_dir = out_dir;
    } else {
        // Cross-mode evaluations get their own directory so they never
        // clobber the training-time report.
        std::string name = "report";
        if (!o.mode.empty()) name += "-" + report.mode_key;
        if (on != "test") name += "-" + on;
        if (o.fold >= 0) name += "-fold" + std::to_string(o.fold);
        report_dir = run_dir / name;
    }
    write_report_dir(report_dir, report, folds);
    std::cout << render_table_text(std::vector<EvalReport>{report}) << "\n"
              << render_class_table(report) << "report written to " << report_dir.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// explain
// ---------------------------------------------------------------------------

int cmd_explain(const ConfigOverrides& o, const std::string& image_ref, int target_class,
                const std::string& out_dir, float alpha, const std::string& layer) {
    ExperimentConfig cfg = resolve_config(o);
    const fs::path run_dir = resolve_run_dir(o, cfg);
    const ExperimentSetup setup = setup_for(cfg, run_dir);
    auto folds = load_folds(run_dir, o.fold);

    const PageRef ref = PageRef::parse(image_ref);
    const ImageU8 image = setup.source->image_for(ref);
    const nn::Tensor input =
        preprocess_input(image, cfg.train.input_size, folds.front().net.channel_mean,
                         folds.front().net.channel_std);
    const EnsemblePrediction pred = predict_ensemble(folds, input);

    const int n_classes = setup.source->class_count();
    if (target_class >= n_classes)
        throw ConfigError("--class " + std::to_string(target_class) + " out of range (0-" +
                          std::to_string(n_classes - 1) + ")");
    const int cls = target_class >= 0 ? target_class : pred.final_class;

    const fs::path dir = out_dir.empty()
                             ? run_dir / "explain" / sanitize_ref(ref.str())
                             : fs::path(out_dir);
    fs::create_directories(dir);

    json stats{{"image_ref", ref.str()},
               {"target_class", cls},
               {"target_label", setup.source->labels().labels.at(cls)},
               {"target_layer", layer},
               {"predicted_class", pred.final_class},
               {"predicted_label", setup.source->labels().labels.at(pred.final_class)},
               {"tie_broken", pred.tie_broken},
               {"votes", pred.votes}};
    json per_fold = json::array();

    std::vector<Heatmap> maps;
    std::vector<double> weights;
    const bool frame_mode = cfg.ablation.mode == AblationMode::FrameOnly;
    for (size_t i = 0; i < folds.size(); ++i) {
        FoldModel& fm = folds[i];
        Heatmap hm = grad_cam(fm, image, cls, cfg.train.input_size, layer);
        const fs::path png = dir / ("fold" + std::to_string(fm.fold) + ".png");
        write_png(png, overlay(hm, image, alpha));

        double mean = 0.0;
        float peak = 0.0f;
        int peak_x = 0, peak_y = 0;
        for (int y = 0; y < hm.height; ++y)
            for (int x = 0; x < hm.width; ++x) {
                const float v = hm.values[static_cast<size_t>(y) * hm.width + x];
                mean += v;
                if (v > peak) {
                    peak = v;
                    peak_x = x;
                    peak_y = y;
                }
            }
        mean /= std::max<size_t>(1, hm.values.size());

        json fold_stats{{"fold", fm.fold},
                        {"file", png.filename().string()},
                        {"degenerate", hm.degenerate},
                        {"mean", mean},
                        {"peak", peak},
                        {"peak_xy", {peak_x, peak_y}},
                        {"vote", pred.votes[i]},
                        {"prob_of_target", pred.model_probs[i][static_cast<size_t>(cls)]}};
        if (frame_mode) {
            StrokeMassStat sm;
            accumulate_stroke_mass(sm, hm, image, cfg.render.stroke_value);
            fold_stats["stroke_near_mean"] = sm.near_mean();
            fold_stats["stroke_far_mean"] = sm.far_mean();
        }
        per_fold.push_back(std::move(fold_stats));

        weights.push_back(pred.model_probs[i][static_cast<size_t>(cls)]);
        maps.push_back(std::move(hm));
    }
    stats["folds"] = per_fold;

    if (maps.size() > 1) {
        // The ensemble view: fold heatmaps averaged with each model's
        // probability for the target class as its vote weight.
        const Heatmap mean_map = mean_heatmap(maps, weights);
        write_png(dir / "mean.png", overlay(mean_map, image, alpha));
        stats["mean_overlay"] = "mean.png";
        stats["vote_weights"] = weights;
    }

    std::ofstream out(dir / "heatmap_stats.json");
    out << stats.dump(2) << "\n";
    if (!out) throw IoError("failed to write heatmap_stats.json");
    std::cout << "explained " << ref.str() << " (class " << cls << " '"
              << setup.source->labels().labels.at(cls) << "') -> " << dir.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// tables
// ---------------------------------------------------------------------------

EvalReport report_from_metrics_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw SchemaError("bad metrics JSON " + path.string() + ": " + e.what());
    }
    EvalReport r;
    const auto task = task_from(j.at("task").get<std::string>());
    if (!task) throw SchemaError("unknown task in " + path.string());
    r.task = *task;
    r.mode_key = j.at("mode").get<std::string>();
    r.noise_family = j.value("noise_family", "none");
    r.noise_range = j.value("noise_range", 0);
    r.n_items = j.at("n_items").get<int>();
    r.accuracy = j.at("accuracy").get<double>();
    r.macro_precision = j.value("macro_precision", 0.0);
    r.macro_recall = j.value("macro_recall", 0.0);
    r.macro_f1 = j.value("macro_f1", 0.0);
    r.majority_baseline = j.value("majority_baseline", 0.0);
    return r;
}

int cmd_tables(const std::vector<std::string>& runs, const std::vector<std::string>& metrics,
               const std::string& csv_out) {
    std::vector<EvalReport> reports;
    for (const auto& run : runs)
        reports.push_back(report_from_metrics_json(fs::path(run) / "report" / "metrics.json"));
    for (const auto& m : metrics) reports.push_back(report_from_metrics_json(m));
    if (reports.empty()) throw ConfigError("pass --run and/or --metrics at least once");

    std::cout << render_table_text(reports);
    if (!csv_out.empty()) {
        std::ofstream out(csv_out);
        if (!out) throw IoError("cannot write " + csv_out);
        out << render_table_csv(reports);
        std::cout << "csv written to " << csv_out << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"panelkit: facing-page layout ablation toolkit"};
    app.require_subcommand(1);

    // validate ---------------------------------------------------------------
    std::string v_corpus;
    std::vector<std::string> v_files;
    bool v_strict = false;
    auto* validate = app.add_subcommand("validate", "check annotation documents");
    validate->add_option("--corpus", v_corpus, "corpus directory (annotations/ + images/)");
    validate->add_option("files", v_files, "individual annotation XML files");
    validate->add_flag("--strict", v_strict, "treat warnings as errors");

    // synth ------------------------------------------------------------------
    std::string s_out = "corpus";
    int s_pages = 100;
    uint64_t s_seed = 7;
    auto* synth = app.add_subcommand("synth", "generate the synthetic layout corpus");
    synth->add_option("--out", s_out, "output corpus directory")->capture_default_str();
    synth->add_option("--pages-per-style", s_pages, "facing pages per style")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    synth->add_option("--seed", s_seed, "generation seed")->capture_default_str();

    // render -----------------------------------------------------------------
    std::string r_corpus, r_out = "rendered", r_mode = "frame_only", r_task = "title";
    std::string r_noise_family;
    int r_noise_range = 0;
    uint64_t r_noise_seed = 0;
    int r_stroke_width = 3, r_mask_fill = 255, r_stroke_value = 0, r_canvas = 255;
    auto* render = app.add_subcommand("render", "render ablation variants of a corpus");
    render->add_option("--corpus", r_corpus, "raw corpus directory")->required();
    render->add_option("--out", r_out, "output root for rendered trees")->capture_default_str();
    render->add_option("--mode", r_mode, "unprocessed|masked|frame_only")->capture_default_str();
    render->add_option("--task", r_task, "task whose labels go into index.json")
        ->capture_default_str();
    render->add_option("--noise-family", r_noise_family, "rectangular|quadrilateral");
    render->add_option("--noise-range", r_noise_range, "max displacement in pixels")
        ->check(CLI::NonNegativeNumber);
    render->add_option("--noise-seed", r_noise_seed, "perturbation seed");
    render->add_option("--stroke-width", r_stroke_width, "frame stroke width")
        ->check(CLI::PositiveNumber);
    render->add_option("--mask-fill", r_mask_fill, "mask fill value")->check(CLI::Range(0, 255));
    render->add_option("--stroke-value", r_stroke_value, "stroke gray value")
        ->check(CLI::Range(0, 255));
    render->add_option("--canvas-value", r_canvas, "frame-only canvas value")
        ->check(CLI::Range(0, 255));

    // split ------------------------------------------------------------------
    std::string sp_corpus, sp_task = "title", sp_protocol = "page_random", sp_out = "manifest.json";
    uint64_t sp_seed = 0;
    auto* split = app.add_subcommand("split", "build a dataset split manifest");
    split->add_option("--corpus", sp_corpus, "raw corpus directory")->required();
    split->add_option("--task", sp_task, "title|four_panel|publisher|genre")
        ->capture_default_str();
    split->add_option("--protocol", sp_protocol, "page_random|leave_one_work_out")
        ->capture_default_str();
    split->add_option("--seed", sp_seed, "split seed")->capture_default_str();
    split->add_option("--out", sp_out, "manifest output path")->capture_default_str();

    // train / predict / evaluate / explain ------------------------------------
    ConfigOverrides t_o, p_o, e_o, x_o;
    auto* train = app.add_subcommand("train", "train the cross-validation folds");
    add_override_options(train, t_o, /*need_config=*/true);

    std::string p_ref, p_image;
    auto* predict = app.add_subcommand("predict", "run the trained ensemble on one page");
    add_override_options(predict, p_o, /*need_config=*/false);
    predict->add_option("--image-ref", p_ref, "page reference 'title/index'");
    predict->add_option("--image", p_image, "path to a rendered page image");

    std::string e_on = "test", e_out;
    auto* evaluate = app.add_subcommand("evaluate", "score a trained run and write reports");
    add_override_options(evaluate, e_o, /*need_config=*/false);
    evaluate->add_option("--on", e_on, "test|dev")->capture_default_str();
    evaluate->add_option("--out", e_out, "report directory override");

    std::string x_ref, x_out, x_layer = "layer4";
    int x_class = -1;
    float x_alpha = 0.4f;
    auto* explain = app.add_subcommand("explain", "emit Grad-CAM overlays for one page");
    add_override_options(explain, x_o, /*need_config=*/false);
    explain->add_option("--image-ref", x_ref, "page reference 'title/index'")->required();
    explain->add_option("--class", x_class, "target class id (default: predicted)");
    explain->add_option("--out", x_out, "output directory for overlays");
    explain->add_option("--alpha", x_alpha, "overlay opacity")->check(CLI::Range(0.0f, 1.0f));
    explain->add_option("--layer", x_layer, "target layer")->capture_default_str();

    // tables -----------------------------------------------------------------
    std::vector<std::string> tb_runs, tb_metrics;
    std::string tb_csv;
    auto* tables = app.add_subcommand("tables", "combine run metrics into comparison tables");
    tables->add_option("--run", tb_runs, "run directories (reads report/metrics.json)");
    tables->add_option("--metrics", tb_metrics, "metrics.json files");
    tables->add_option("--csv", tb_csv, "also write the CSV table here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_validate(v_corpus, v_files, v_strict);
        if (synth->parsed()) return cmd_synth(s_out, s_pages, s_seed);
        if (render->parsed()) {
            AblationSpec spec{parse_mode(r_mode), std::nullopt};
            if (!r_noise_family.empty() || r_noise_range > 0) {
                if (spec.mode != AblationMode::FrameOnly)
                    throw ConfigError("noise applies to frame_only rendering");
                spec.noise = NoiseSpec{r_noise_family.empty() ? NoiseFamily::Rectangular
                                                              : parse_family(r_noise_family),
                                       r_noise_range, r_noise_seed};
            }
            RenderConfig rc;
            rc.mask_fill = static_cast<uint8_t>(r_mask_fill);
            rc.stroke_value = static_cast<uint8_t>(r_stroke_value);
            rc.stroke_width = r_stroke_width;
            rc.canvas_value = static_cast<uint8_t>(r_canvas);
            return cmd_render(r_corpus, r_out, spec, rc, parse_task(r_task));
        }
        if (split->parsed())
            return cmd_split(sp_corpus, parse_task(sp_task), sp_protocol, sp_seed, sp_out);
        if (train->parsed()) return cmd_train(t_o);
        if (predict->parsed()) return cmd_predict(p_o, p_ref, p_image);
        if (evaluate->parsed()) return cmd_evaluate(e_o, e_on, e_out);
        if (explain->parsed()) return cmd_explain(x_o, x_ref, x_class, x_out, x_alpha, x_layer);
        if (tables->parsed()) return cmd_tables(tb_runs, tb_metrics, tb_csv);
    } catch (const Error& e) {
        std::cerr << "panelkit: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "panelkit: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
