#pragma once

// Fine-tuning pipeline: a data-source abstraction over rendered corpora, the
// fixed training recipe (SGD momentum 0.9, lr 0.001 decayed 10x every 30
// epochs, batch 32, cross-entropy, up to 100 epochs), and 5-fold ensemble
// prediction with plurality voting.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "panelkit/corpus.hpp"
#include "panelkit/image_io.hpp"
#include "panelkit/nn.hpp"
#include "panelkit/render.hpp"

namespace panelkit {

struct TrainConfig {
    std::string backbone = "resnet101-imagenet";
    int batch_size = 32;
    float momentum = 0.9f;
    float initial_lr = 0.001f;
    float lr_decay_factor = 0.1f;
    int lr_decay_every = 30; // epochs between decays
    int max_epochs = 100;
    int input_size = 224;
    uint64_t seed = 0;
    bool full_finetune = true;        // fine-tune every parameter (default)
    bool select_best_on_dev = false;  // opt-in dev-based snapshot selection
    std::string weights_path;         // optional pretrained snapshot

    void validate() const {
        if (batch_size <= 0 || initial_lr <= 0.0f || lr_decay_factor <= 0.0f ||
            lr_decay_every <= 0 || max_epochs <= 0 || input_size <= 0 || momentum < 0.0f)
            throw ConfigError("train config fields must be positive");
    }

    // lr(e) = initial_lr * decay^((e-1)/every), e counted from 1.
    float lr_at_epoch(int epoch) const {
        return initial_lr * std::pow(lr_decay_factor, static_cast<float>((epoch - 1) / lr_decay_every));
    }

    // Accuracy is measured every epoch for the first 30, then every 10.
    bool eval_due(int epoch) const {
        return epoch <= 30 || epoch % 10 == 0 || epoch == max_epochs;
    }

    nlohmann::json to_json() const {
        return {{"backbone", backbone},
                {"batch_size", batch_size},
                {"momentum", momentum},
                {"initial_lr", initial_lr},
                {"lr_decay_factor", lr_decay_factor},
                {"lr_decay_every", lr_decay_every},
                {"max_epochs", max_epochs},
                {"input_size", input_size},
                {"seed", seed},
                {"full_finetune", full_finetune},
                {"select_best_on_dev", select_best_on_dev},
                {"weights_path", weights_path}};
    }

    static TrainConfig from_json(const nlohmann::json& j) {
        TrainConfig c;
        c.backbone = j.value("backbone", c.backbone);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.momentum = j.value("momentum", c.momentum);
        c.initial_lr = j.value("initial_lr", c.initial_lr);
        c.lr_decay_factor = j.value("lr_decay_factor", c.lr_decay_factor);
        c.lr_decay_every = j.value("lr_decay_every", c.lr_decay_every);
        c.max_epochs = j.value("max_epochs", c.max_epochs);
        c.input_size = j.value("input_size", c.input_size);
        c.seed = j.value("seed", c.seed);
        c.full_finetune = j.value("full_finetune", c.full_finetune);
        c.select_best_on_dev = j.value("select_best_on_dev", c.select_best_on_dev);
        c.weights_path = j.value("weights_path", c.weights_path);
        c.validate();
        return c;
    }
};

// Square resize (aspect intentionally not preserved), channel replication,
// and the backbone's pretraining normalization.
inline nn::Tensor preprocess_input(const ImageU8& img, int input_size,
                                   const std::vector<float>& channel_mean,
                                   const std::vector<float>& channel_std) {
    const auto resized = resize_bilinear(img, input_size, input_size);
    const int channels = static_cast<int>(channel_mean.size());
    nn::Tensor t(1, channels, input_size, input_size);
    const size_t plane = static_cast<size_t>(input_size) * input_size;
    for (int c = 0; c < channels; ++c)
        for (size_t i = 0; i < plane; ++i)
            t.data[static_cast<size_t>(c) * plane + i] =
                (resized[i] - channel_mean[c]) / channel_std[c];
    return t;
}

// ---------------------------------------------------------------------------
// Data sources
// ---------------------------------------------------------------------------

class DataSource {
public:
    virtual ~DataSource() = default;
    virtual int class_count() const = 0;
    virtual int label_of(const PageRef& ref) const = 0;
    // Raw rendered page, before model preprocessing.
    virtual ImageU8 image_for(const PageRef& ref) const = 0;
    virtual const LabelMap& labels() const = 0;
};

// Synthetic corpus rendered on the fly. Pages are not cached here: the
// preprocessed-tensor cache downstream makes each page render once per
// experiment, and full-resolution rasters are too large to keep around.
class MemoryCorpus : public DataSource {
public:
    MemoryCorpus(SyntheticCorpus corpus, TaskKind task, AblationSpec spec,
                 RenderConfig render_cfg = {})
        : corpus_(std::move(corpus)), task_(task), spec_(std::move(spec)),
          render_cfg_(render_cfg) {
        label_map_ = build_label_map(corpus_.books, task_);
        for (const auto& b : corpus_.books) {
            const int label = label_map_.id_of(class_label_of(b, task_));
            for (const auto& p : b.pages)
                if (p.has_frames()) pages_[{b.title, p.index}] = {&b, &p, label};
        }
    }

    int class_count() const override { return label_map_.size(); }
    const LabelMap& labels() const override { return label_map_; }

    int label_of(const PageRef& ref) const override { return entry(ref).label; }

    ImageU8 image_for(const PageRef& ref) const override {
        const auto& e = entry(ref);
        const auto raster = corpus_.page_raster(ref.title, ref.page_index);
        return render_page(raster, *e.page, spec_, render_cfg_, e.book->title).pixels;
    }

    std::vector<PageRef> all_refs() const {
        std::vector<PageRef> out;
        for (const auto& [ref, e] : pages_) out.push_back(ref);
        return out;
    }

private:
    struct Entry {
        const BookAnnotation* book;
        const PageAnnotation* page;
        int label;
    };

    const Entry& entry(const PageRef& ref) const {
        const auto it = pages_.find(ref);
        if (it == pages_.end()) throw CorpusMissingError("no page " + ref.str() + " in corpus");
        return it->second;
    }

    SyntheticCorpus corpus_;
    TaskKind task_;
    AblationSpec spec_;
    RenderConfig render_cfg_;
    LabelMap label_map_;
    std::map<PageRef, Entry> pages_;
};

// Rendered corpus on disk: <root>/<mode>/<title>/<page>.png plus an
// index.json mapping relative path -> {title, page, label}.
class DirectoryCorpus : public DataSource {
public:
    DirectoryCorpus(std::filesystem::path root, const std::string& mode_dir) : root_(std::move(root)) {
        const auto index_path = root_ / mode_dir / "index.json";
        std::ifstream in(index_path);
        if (!in) throw CorpusMissingError("missing corpus index " + index_path.string());
        nlohmann::json j;
        in >> j;
        std::set<std::string> label_names;
        for (const auto& [path, meta] : j.at("items").items()) {
            Item item;
            item.path = root_ / mode_dir / path;
            item.label_name = meta.at("label").get<std::string>();
            label_names.insert(item.label_name);
            const PageRef ref{meta.at("title").get<std::string>(), meta.at("page").get<int>()};
            items_[ref] = std::move(item);
        }
        label_map_ = LabelMap::from_labels(std::move(label_names));
        for (auto& [ref, item] : items_) item.label = label_map_.id_of(item.label_name);
    }

    int class_count() const override { return label_map_.size(); }
    const LabelMap& labels() const override { return label_map_; }

    int label_of(const PageRef& ref) const override { return item(ref).label; }

    ImageU8 image_for(const PageRef& ref) const override {
        const auto& it = item(ref);
        if (!std::filesystem::exists(it.path))
            throw CorpusMissingError("missing rendered page " + it.path.string());
        return read_image_gray(it.path.string());
    }

private:
    struct Item {
        std::filesystem::path path;
        std::string label_name;
        int label = 0;
    };

    const Item& item(const PageRef& ref) const {
        const auto it = items_.find(ref);
        if (it == items_.end()) throw CorpusMissingError("no page " + ref.str() + " in index");
        return it->second;
    }

    std::filesystem::path root_;
    LabelMap label_map_;
    std::map<PageRef, Item> items_;
};

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct CurvePoint {
    int epoch = 0;
    float train_loss = 0.0f;
    float train_accuracy = 0.0f;
    float val_accuracy = 0.0f;
};

struct FoldModel {
    int fold = 0;
    TaskKind task = TaskKind::Title104;
    std::string mode_key; // AblationSpec::dir_name()
    nn::Network net;
    std::vector<CurvePoint> curve;

    std::vector<float> predict_probs(const nn::Tensor& input) {
        const auto logits = net.forward(input, false);
        return nn::softmax(logits.data.data(), logits.c);
    }
};

namespace detail {

// Stacks preprocessed single-sample tensors into one batch tensor.
inline nn::Tensor make_batch(const std::vector<nn::Tensor>& samples) {
    const auto& first = samples.front();
    nn::Tensor batch(static_cast<int>(samples.size()), first.c, first.h, first.w);
    const size_t stride = first.size();
    for (size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].size() != stride) throw DimensionMismatchError("ragged batch");
        std::copy(samples[i].data.begin(), samples[i].data.end(),
                  batch.data.begin() + static_cast<std::ptrdiff_t>(i * stride));
    }
    return batch;
}

} // namespace detail

// Preprocessed-tensor cache shared across folds of one experiment; keyed by
// page ref, valid for one (source, input_size) pair.
class TensorCache {
public:
    TensorCache(const DataSource& source, const nn::Network& net, int input_size)
        : source_(source), input_size_(input_size), mean_(net.channel_mean), std_(net.channel_std) {}

    // Norm stats without a live network, e.g. before any fold is built.
    TensorCache(const DataSource& source, const nn::BackboneNorm& norm, int input_size)
        : source_(source), input_size_(input_size), mean_(norm.mean), std_(norm.std) {}

    const nn::Tensor& get(const PageRef& ref) const {
        auto it = cache_.find(ref);
        if (it == cache_.end())
            it = cache_.emplace(ref, preprocess_input(source_.image_for(ref), input_size_, mean_, std_))
                     .first;
        return it->second;
    }

private:
    const DataSource& source_;
    int input_size_;
    std::vector<float> mean_, std_;
    mutable std::map<PageRef, nn::Tensor> cache_;
};

inline float batched_accuracy(nn::Network& net, const std::vector<PageRef>& refs,
                              const DataSource& source, const TensorCache& cache, int batch_size) {
    if (refs.empty()) return 0.0f;
    size_t correct = 0;
    for (size_t start = 0; start < refs.size(); start += static_cast<size_t>(batch_size)) {
        const size_t end = std::min(refs.size(), start + static_cast<size_t>(batch_size));
        std::vector<nn::Tensor> samples;
        std::vector<int> labels;
        for (size_t i = start; i < end; ++i) {
            samples.push_back(cache.get(refs[i]));
            labels.push_back(source.label_of(refs[i]));
        }
        const auto batch = detail::make_batch(samples);
        const auto logits = net.forward(batch, false);
        for (int i = 0; i < logits.n; ++i) {
            int arg = 0;
            for (int j = 1; j < logits.c; ++j)
                if (logits.at(i, j, 0, 0) > logits.at(i, arg, 0, 0)) arg = j;
            if (arg == labels[i]) ++correct;
        }
    }
    return static_cast<float>(correct) / static_cast<float>(refs.size());
}

inline FoldModel train_fold(const DataSource& source, const SplitManifest& manifest, int fold,
                            const AblationSpec& spec, const TrainConfig& cfg,
                            const TensorCache* shared_cache = nullptr) {
    cfg.validate();
    if (fold < 0 || fold >= 5) throw ConfigError("fold must be in [0, 5)");
    const auto train_refs_base = manifest.train_for_fold(fold);
    const auto& val_refs = manifest.val_for_fold(fold);
    if (train_refs_base.empty()) throw CorpusMissingError("empty training set for fold");

    FoldModel fm;
    fm.fold = fold;
    fm.task = manifest.task;
    fm.mode_key = spec.dir_name();
    fm.net = nn::make_backbone(cfg.backbone, source.class_count(),
                               derive_seed(cfg.seed, "model", fold));
    if (!cfg.weights_path.empty()) {
        std::ifstream in(cfg.weights_path, std::ios::binary);
        if (!in) throw IoError("cannot open weights file " + cfg.weights_path);
        auto pretrained = nn::load_network(in);
        if (pretrained.backbone_id != fm.net.backbone_id)
            throw ConfigError("weights file is for backbone '" + pretrained.backbone_id + "'");
        if (pretrained.num_classes != fm.net.num_classes)
            throw ClassCountMismatchError("weights expect " +
                                          std::to_string(pretrained.num_classes) + " classes, task has " +
                                          std::to_string(fm.net.num_classes));
        fm.net = std::move(pretrained);
    } else if (cfg.backbone.find("imagenet") != std::string::npos) {
        std::cerr << "[panelkit] warning: no weights file given for '" << cfg.backbone
                  << "'; starting from random initialization\n";
    }

    // Labels outside the model head make the task/corpus pairing invalid.
    for (const auto& ref : train_refs_base) {
        const int label = source.label_of(ref);
        if (label < 0 || label >= fm.net.num_classes)
            throw ClassCountMismatchError("label " + std::to_string(label) + " outside model head of " +
                                          std::to_string(fm.net.num_classes));
    }

    std::optional<TensorCache> local_cache;
    if (!shared_cache) local_cache.emplace(source, fm.net, cfg.input_size);
    const TensorCache& cache = shared_cache ? *shared_cache : *local_cache;

    nn::Sgd opt{cfg.initial_lr, cfg.momentum};
    const auto head_params = [&]() {
        // Head-only fine-tuning: restrict updates to the classification layer
        // (last two parameter tensors: fc weight and bias).
        auto all = fm.net.parameters();
        return std::vector<nn::Param*>(all.end() - 2, all.end());
    };

    float best_dev_acc = -1.0f;
    std::optional<std::string> best_snapshot;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        opt.lr = cfg.lr_at_epoch(epoch);
        auto train_refs = train_refs_base;
        Rng shuffle_rng(derive_seed(cfg.seed, "epoch", fold, epoch));
        shuffle_rng.shuffle(train_refs);

        double epoch_loss = 0.0;
        size_t batches = 0, correct = 0;
        for (size_t start = 0; start < train_refs.size(); start += static_cast<size_t>(cfg.batch_size)) {
            const size_t end = std::min(train_refs.size(), start + static_cast<size_t>(cfg.batch_size));
            std::vector<nn::Tensor> samples;
            std::vector<int> labels;
            for (size_t i = start; i < end; ++i) {
                samples.push_back(cache.get(train_refs[i]));
                labels.push_back(source.label_of(train_refs[i]));
            }
            const auto batch = detail::make_batch(samples);
            fm.net.zero_grad();
            const auto logits = fm.net.forward(batch, true);
            const auto loss = nn::softmax_cross_entropy(logits, labels);
            fm.net.backward(loss.dlogits);
            opt.step(cfg.full_finetune ? fm.net.parameters() : head_params());
            epoch_loss += loss.loss;
            ++batches;
            for (int i = 0; i < logits.n; ++i) {
                int arg = 0;
                for (int j = 1; j < logits.c; ++j)
                    if (logits.at(i, j, 0, 0) > logits.at(i, arg, 0, 0)) arg = j;
                if (arg == labels[i]) ++correct;
            }
        }

        if (cfg.eval_due(epoch)) {
            CurvePoint pt;
            pt.epoch = epoch;
            pt.train_loss = static_cast<float>(epoch_loss / std::max<size_t>(batches, 1));
            pt.train_accuracy = static_cast<float>(correct) / static_cast<float>(train_refs.size());
            pt.val_accuracy = batched_accuracy(fm.net, val_refs, source, cache, cfg.batch_size);
            fm.curve.push_back(pt);
        }

        if (cfg.select_best_on_dev && !manifest.dev.empty()) {
            const float dev_acc =
                batched_accuracy(fm.net, manifest.dev, source, cache, cfg.batch_size);
            if (dev_acc > best_dev_acc) {
                best_dev_acc = dev_acc;
                std::ostringstream buf;
                nn::save_network(fm.net, buf);
                best_snapshot = buf.str();
            }
        }
    }

    if (cfg.select_best_on_dev && best_snapshot) {
        std::istringstream buf(*best_snapshot);
        fm.net = nn::load_network(buf);
    }
    return fm;
}

// ---------------------------------------------------------------------------
// Ensemble prediction
// ---------------------------------------------------------------------------

struct EnsemblePrediction {
    std::vector<int> votes;                       // one argmax per model
    std::vector<std::vector<float>> model_probs;  // per-model class probabilities
    int final_class = 0;
    bool tie_broken = false;
};

inline EnsemblePrediction predict_ensemble(std::vector<FoldModel>& models,
                                           const nn::Tensor& input) {
    if (models.empty()) throw ConfigError("ensemble needs at least one model");
    const int classes = models.front().net.num_classes;
    for (const auto& m : models)
        if (m.task != models.front().task || m.mode_key != models.front().mode_key ||
            m.net.num_classes != classes)
            throw ModelTaskMismatchError("ensemble models disagree on task/mode/classes");

    EnsemblePrediction out;
    std::vector<int> vote_count(classes, 0);
    for (auto& m : models) {
        const auto probs = m.predict_probs(input);
        int arg = 0;
        for (int j = 1; j < classes; ++j)
            if (probs[j] > probs[arg]) arg = j;
        out.votes.push_back(arg);
        out.model_probs.push_back(probs);
        ++vote_count[arg];
    }

    const int top_votes = *std::max_element(vote_count.begin(), vote_count.end());
    std::vector<int> tied;
    for (int j = 0; j < classes; ++j)
        if (vote_count[j] == top_votes) tied.push_back(j);

    if (tied.size() == 1) {
        out.final_class = tied.front();
        out.tie_broken = false;
        return out;
    }
    // Plurality tie: highest probability mass summed across all models, then
    // lowest class id as the final total order.
    out.tie_broken = true;
    double best_mass = -1.0;
    int best = tied.front();
    for (int j : tied) {
        double mass = 0.0;
        for (const auto& probs : out.model_probs) mass += probs[j];
        if (mass > best_mass + 1e-12) {
            best_mass = mass;
            best = j;
        }
    }
    out.final_class = best;
    return out;
}

// ---------------------------------------------------------------------------
// Snapshot layout: runs/<experiment-id>/fold<k>/{model.bin, metadata.json}
// ---------------------------------------------------------------------------

inline std::filesystem::path fold_dir(const std::filesystem::path& run_dir, int fold) {
    return run_dir / ("fold" + std::to_string(fold));
}

inline void save_fold(const std::filesystem::path& run_dir, FoldModel& fm,
                      const nlohmann::json& metadata) {
    const auto dir = fold_dir(run_dir, fm.fold);
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "model.bin", std::ios::binary);
        nn::save_network(fm.net, out);
    }
    nlohmann::json meta = metadata;
    meta["fold"] = fm.fold;
    meta["task"] = to_string(fm.task);
    meta["mode"] = fm.mode_key;
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& pt : fm.curve)
        curve.push_back({{"epoch", pt.epoch},
                         {"train_loss", pt.train_loss},
                         {"train_accuracy", pt.train_accuracy},
                         {"val_accuracy", pt.val_accuracy}});
    meta["curve"] = curve;
    std::ofstream out(dir / "metadata.json");
    out << meta.dump(2) << "\n";
    if (!out) throw IoError("failed to write fold metadata");
}

inline FoldModel load_fold(const std::filesystem::path& run_dir, int fold) {
    const auto dir = fold_dir(run_dir, fold);
    std::ifstream meta_in(dir / "metadata.json");
    if (!meta_in) throw IoError("missing fold metadata in " + dir.string());
    nlohmann::json meta;
    meta_in >> meta;
    FoldModel fm;
    fm.fold = meta.at("fold").get<int>();
    const auto task = task_from(meta.at("task").get<std::string>());
    if (!task) throw ConfigError("unknown task in fold metadata");
    fm.task = *task;
    fm.mode_key = meta.at("mode").get<std::string>();
    for (const auto& pt : meta.at("curve"))
        fm.curve.push_back({pt.at("epoch").get<int>(), pt.at("train_loss").get<float>(),
                            pt.at("train_accuracy").get<float>(),
                            pt.at("val_accuracy").get<float>()});
    std::ifstream in(dir / "model.bin", std::ios::binary);
    if (!in) throw IoError("missing model snapshot in " + dir.string());
    fm.net = nn::load_network(in);
    return fm;
}

} // namespace panelkit
