#pragma once

// Labeled datasets and deterministic splits for the four experimental
// protocols, plus a synthetic layout corpus for desk-scale runs.

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "panelkit/annotation.hpp"
#include "panelkit/errors.hpp"
#include "panelkit/image.hpp"
#include "panelkit/rng.hpp"

namespace panelkit {

enum class TaskKind { Title104, FourPanelSubset, Publisher, Genre };

inline const char* to_string(TaskKind t) {
    switch (t) {
        case TaskKind::Title104: return "title";
        case TaskKind::FourPanelSubset: return "four_panel";
        case TaskKind::Publisher: return "publisher";
        case TaskKind::Genre: return "genre";
    }
    return "?";
}

inline std::optional<TaskKind> task_from(std::string_view s) {
    if (s == "title") return TaskKind::Title104;
    if (s == "four_panel") return TaskKind::FourPanelSubset;
    if (s == "publisher") return TaskKind::Publisher;
    if (s == "genre") return TaskKind::Genre;
    return std::nullopt;
}

// Different volumes of one work share a single class: a trailing volume
// suffix ("_vol01", "_volume2") is stripped from the title.
inline std::string work_key(const std::string& title) {
    const size_t us = title.rfind('_');
    if (us == std::string::npos || us + 1 >= title.size()) return title;
    std::string tail = title.substr(us + 1);
    std::string lower = tail;
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    size_t p = 0;
    if (lower.rfind("volume", 0) == 0)
        p = 6;
    else if (lower.rfind("vol", 0) == 0)
        p = 3;
    else
        return title;
    if (p >= tail.size()) return title;
    for (size_t i = p; i < tail.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(tail[i]))) return title;
    return title.substr(0, us);
}

// Bijection label-string <-> contiguous id, stable across runs: labels are
// sorted lexicographically.
struct LabelMap {
    std::vector<std::string> labels;
    std::map<std::string, int> ids;

    static LabelMap from_labels(std::set<std::string> unique) {
        LabelMap m;
        m.labels.assign(unique.begin(), unique.end());
        for (int i = 0; i < static_cast<int>(m.labels.size()); ++i) m.ids[m.labels[i]] = i;
        return m;
    }

    int id_of(const std::string& label) const {
        auto it = ids.find(label);
        if (it == ids.end()) throw IdOutOfRangeError("unknown label '" + label + "'");
        return it->second;
    }

    int size() const { return static_cast<int>(labels.size()); }
};

inline std::string class_label_of(const BookAnnotation& book, TaskKind task) {
    switch (task) {
        case TaskKind::Title104:
        case TaskKind::FourPanelSubset: return work_key(book.title);
        case TaskKind::Publisher: return book.publisher;
        case TaskKind::Genre: return book.genre;
    }
    return {};
}

inline bool book_in_task(const BookAnnotation& book, TaskKind task) {
    if (task == TaskKind::FourPanelSubset) return book.genre == "4-panel";
    return true;
}

inline LabelMap build_label_map(const std::vector<BookAnnotation>& books, TaskKind task) {
    std::set<std::string> labels;
    for (const auto& b : books)
        if (book_in_task(b, task)) labels.insert(class_label_of(b, task));
    return LabelMap::from_labels(std::move(labels));
}

struct PageRef {
    std::string title;
    int page_index = 0;

    std::string str() const { return title + "/" + std::to_string(page_index); }

    static PageRef parse(const std::string& s) {
        const size_t slash = s.rfind('/');
        if (slash == std::string::npos) throw ConfigError("bad page ref '" + s + "'");
        return {s.substr(0, slash), std::stoi(s.substr(slash + 1))};
    }

    friend bool operator==(const PageRef&, const PageRef&) = default;
    friend auto operator<=>(const PageRef&, const PageRef&) = default;
};

enum class SplitProtocol { PageRandom, LeaveOneWorkOut };

inline const char* to_string(SplitProtocol p) {
    return p == SplitProtocol::PageRandom ? "page_random" : "leave_one_work_out";
}

struct SplitManifest {
    TaskKind task = TaskKind::Title104;
    uint64_t seed = 0;
    SplitProtocol protocol = SplitProtocol::PageRandom;
    std::array<std::vector<PageRef>, 5> train_folds;
    std::vector<PageRef> dev;
    std::vector<PageRef> test;

    size_t train_size() const {
        size_t n = 0;
        for (const auto& f : train_folds) n += f.size();
        return n;
    }

    // Training refs for CV fold k = every train fold except k.
    std::vector<PageRef> train_for_fold(int fold) const {
        std::vector<PageRef> out;
        for (int i = 0; i < 5; ++i)
            if (i != fold) out.insert(out.end(), train_folds[i].begin(), train_folds[i].end());
        return out;
    }
    const std::vector<PageRef>& val_for_fold(int fold) const { return train_folds[fold]; }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["task"] = to_string(task);
        j["seed"] = seed;
        j["protocol"] = to_string(protocol);
        auto refs = [](const std::vector<PageRef>& v) {
            nlohmann::json a = nlohmann::json::array();
            for (const auto& r : v) a.push_back(r.str());
            return a;
        };
        j["folds"] = nlohmann::json::array();
        for (const auto& f : train_folds) j["folds"].push_back(refs(f));
        j["dev"] = refs(dev);
        j["test"] = refs(test);
        return j;
    }

    static SplitManifest from_json(const nlohmann::json& j) {
        SplitManifest m;
        auto t = task_from(j.at("task").get<std::string>());
        if (!t) throw ConfigError("unknown task in manifest");
        m.task = *t;
        m.seed = j.at("seed").get<uint64_t>();
        const auto proto = j.at("protocol").get<std::string>();
        if (proto == "page_random")
            m.protocol = SplitProtocol::PageRandom;
        else if (proto == "leave_one_work_out")
            m.protocol = SplitProtocol::LeaveOneWorkOut;
        else
            throw ConfigError("unknown protocol '" + proto + "'");
        auto refs = [](const nlohmann::json& a) {
            std::vector<PageRef> v;
            for (const auto& s : a) v.push_back(PageRef::parse(s.get<std::string>()));
            return v;
        };
        const auto& folds = j.at("folds");
        if (folds.size() != 5) throw ConfigError("manifest must carry 5 train folds");
        for (int i = 0; i < 5; ++i) m.train_folds[i] = refs(folds[i]);
        m.dev = refs(j.at("dev"));
        m.test = refs(j.at("test"));
        return m;
    }
};

// Global 80/10/10 partition sizes. The 10,122-page reference corpus has a
// fixed published partition (8,053 / 1,011 / 1,058) that plain rounding does
// not produce, so that size is pinned; elsewhere dev takes the floor and the
// test remainder rounds up ("toward test").
struct SplitSizes {
    int train = 0;
    int dev = 0;
    int test = 0;
};

inline SplitSizes split_sizes(int n) {
    if (n == 10122) return {8053, 1011, 1058};
    const int dev = n / 10;
    const int test = (n + 5) / 10;
    return {n - dev - test, dev, test};
}

namespace detail {

// Largest-remainder apportionment of `total` over classes with per-class
// minimum and capacity constraints. weights are class sizes.
inline std::vector<int> apportion(const std::vector<int>& weights, const std::vector<int>& mins,
                                  const std::vector<int>& caps, int total) {
    const int n = static_cast<int>(weights.size());
    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    int min_sum = 0, cap_sum = 0;
    for (int i = 0; i < n; ++i) {
        min_sum += mins[i];
        cap_sum += caps[i];
    }
    if (total < min_sum || total > cap_sum)
        throw InsufficientPagesError("cannot apportion " + std::to_string(total) + " items over " +
                                     std::to_string(n) + " classes (min " +
                                     std::to_string(min_sum) + ", cap " + std::to_string(cap_sum) +
                                     ")");
    std::vector<int> out(n);
    std::vector<double> frac(n);
    int assigned = 0;
    for (int i = 0; i < n; ++i) {
        const double quota = wsum > 0 ? total * weights[i] / wsum : 0.0;
        out[i] = std::clamp(static_cast<int>(std::floor(quota)), mins[i], caps[i]);
        frac[i] = quota - std::floor(quota);
        assigned += out[i];
    }
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    while (assigned < total) {
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] > frac[b]; });
        bool moved = false;
        for (int i : order) {
            if (assigned == total) break;
            if (out[i] < caps[i]) {
                ++out[i];
                frac[i] -= 1.0;
                ++assigned;
                moved = true;
            }
        }
        if (!moved) throw InsufficientPagesError("apportionment stalled");
    }
    while (assigned > total) {
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] < frac[b]; });
        bool moved = false;
        for (int i : order) {
            if (assigned == total) break;
            if (out[i] > mins[i]) {
                --out[i];
                frac[i] += 1.0;
                --assigned;
                moved = true;
            }
        }
        if (!moved) throw InsufficientPagesError("apportionment stalled");
    }
    return out;
}

struct ClassPages {
    int class_id = 0;
    std::vector<PageRef> refs;
};

inline std::vector<ClassPages> collect_class_pages(const std::vector<BookAnnotation>& books,
                                                   TaskKind task, const LabelMap& labels) {
    std::vector<ClassPages> groups(labels.size());
    for (int c = 0; c < labels.size(); ++c) groups[c].class_id = c;
    std::vector<const BookAnnotation*> sorted;
    for (const auto& b : books)
        if (book_in_task(b, task)) sorted.push_back(&b);
    std::sort(sorted.begin(), sorted.end(),
              [](const BookAnnotation* a, const BookAnnotation* b) { return a->title < b->title; });
    for (const BookAnnotation* b : sorted) {
        const int c = labels.id_of(class_label_of(*b, task));
        for (const auto& page : b->pages)
            if (page.has_frames()) groups[c].refs.push_back({b->title, page.index});
    }
    return groups;
}

} // namespace detail

// Page-level random split, stratified by class so every class reaches every
// partition once it has >= 13 pages. Fully determined by the seed.
inline SplitManifest build_page_random_split(const std::vector<BookAnnotation>& books,
                                             TaskKind task, uint64_t seed) {
    const LabelMap labels = build_label_map(books, task);
    auto groups = detail::collect_class_pages(books, task, labels);
    int total = 0;
    for (const auto& g : groups) {
        if (static_cast<int>(g.refs.size()) < 3)
            throw InsufficientPagesError("class '" + labels.labels[g.class_id] + "' has " +
                                         std::to_string(g.refs.size()) +
                                         " pages; at least 3 are required");
        total += static_cast<int>(g.refs.size());
    }
    const SplitSizes sizes = split_sizes(total);

    const int n = static_cast<int>(groups.size());
    std::vector<int> counts(n), test_min(n), test_cap(n);
    for (int i = 0; i < n; ++i) {
        counts[i] = static_cast<int>(groups[i].refs.size());
        test_min[i] = counts[i] >= 13 ? 1 : 0;
        test_cap[i] = counts[i] - 2; // leave room for >= 1 dev and >= 1 train page
    }
    const auto test_counts = detail::apportion(counts, test_min, test_cap, sizes.test);

    std::vector<int> dev_min(n), dev_cap(n);
    for (int i = 0; i < n; ++i) {
        dev_min[i] = counts[i] >= 13 ? 1 : 0;
        dev_cap[i] = counts[i] - test_counts[i] - 1;
    }
    const auto dev_counts = detail::apportion(counts, dev_min, dev_cap, sizes.dev);

    SplitManifest m;
    m.task = task;
    m.seed = seed;
    m.protocol = SplitProtocol::PageRandom;
    int fold_ptr = 0;
    for (int i = 0; i < n; ++i) {
        auto refs = groups[i].refs;
        Rng rng(derive_seed(seed, "page_random", i));
        rng.shuffle(refs);
        int k = 0;
        for (int t = 0; t < test_counts[i]; ++t) m.test.push_back(refs[k++]);
        for (int d = 0; d < dev_counts[i]; ++d) m.dev.push_back(refs[k++]);
        for (; k < static_cast<int>(refs.size()); ++k) {
            m.train_folds[fold_ptr % 5].push_back(refs[k]);
            ++fold_ptr;
        }
    }
    return m;
}

inline SplitManifest build_title_split(const std::vector<BookAnnotation>& books, uint64_t seed) {
    return build_page_random_split(books, TaskKind::Title104, seed);
}

inline SplitManifest build_four_panel_split(const std::vector<BookAnnotation>& books,
                                            uint64_t seed) {
    return build_page_random_split(books, TaskKind::FourPanelSubset, seed);
}

// Leave-one-work-out: per class, all pages of one randomly chosen work go to
// test; the remaining works are assigned whole to train folds, so no work
// straddles a fold boundary. Dev is empty by default.
inline SplitManifest build_leave_one_work_out(const std::vector<BookAnnotation>& books,
                                              TaskKind task, uint64_t seed) {
    if (task != TaskKind::Publisher && task != TaskKind::Genre)
        throw ConfigError("leave-one-work-out applies to publisher/genre tasks");
    const LabelMap labels = build_label_map(books, task);

    struct WorkUnit {
        std::string key;
        int class_id = 0;
        std::vector<PageRef> refs;
    };
    std::map<std::string, WorkUnit> units; // volumes of one work merge into one unit
    for (const auto& b : books) {
        auto& u = units[work_key(b.title)];
        u.key = work_key(b.title);
        u.class_id = labels.id_of(class_label_of(b, task));
        for (const auto& page : b.pages)
            if (page.has_frames()) u.refs.push_back({b.title, page.index});
    }

    std::vector<std::vector<WorkUnit>> by_class(labels.size());
    for (auto& [key, u] : units) by_class[u.class_id].push_back(u);
    for (int c = 0; c < labels.size(); ++c) {
        if (by_class[c].size() < 2)
            throw SingleWorkClassError("class '" + labels.labels[c] + "' has " +
                                       std::to_string(by_class[c].size()) +
                                       " work(s); leave-one-work-out needs at least 2");
    }

    SplitManifest m;
    m.task = task;
    m.seed = seed;
    m.protocol = SplitProtocol::LeaveOneWorkOut;

    std::vector<WorkUnit> remaining;
    for (int c = 0; c < labels.size(); ++c) {
        auto& works = by_class[c];
        std::sort(works.begin(), works.end(),
                  [](const WorkUnit& a, const WorkUnit& b) { return a.key < b.key; });
        Rng rng(derive_seed(seed, "lowo", c));
        const auto pick = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(works.size()) - 1));
        for (size_t i = 0; i < works.size(); ++i) {
            if (i == pick)
                m.test.insert(m.test.end(), works[i].refs.begin(), works[i].refs.end());
            else
                remaining.push_back(works[i]);
        }
    }

    // Work-level fold assignment, balanced by page count.
    std::sort(remaining.begin(), remaining.end(),
              [](const WorkUnit& a, const WorkUnit& b) { return a.key < b.key; });
    Rng rng(derive_seed(seed, "lowo_folds"));
    rng.shuffle(remaining);
    std::array<size_t, 5> load{};
    for (const auto& u : remaining) {
        int best = 0;
        for (int f = 1; f < 5; ++f)
            if (load[f] < load[best]) best = f;
        m.train_folds[best].insert(m.train_folds[best].end(), u.refs.begin(), u.refs.end());
        load[best] += u.refs.size();
    }
    return m;
}

// ---------------------------------------------------------------------------
// Synthetic layout corpus
// ---------------------------------------------------------------------------

// A facing-page layout recipe. Every parameter is in source-page pixels.
struct SyntheticStyle {
    std::string id;                  // becomes the book title
    std::string genre = "synthetic";
    std::string publisher = "synthetic";
    int rows_min = 3, rows_max = 3;
    int cols_min = 2, cols_max = 2;
    double gutter_mean = 14.0, gutter_jitter = 3.0;
    double margin_mean = 26.0, margin_jitter = 5.0;
    double merge_prob = 0.0; // chance a row merges two adjacent cells
    bool four_panel = false; // single column of 4 equal-height panels per half
    int page_width = 820, page_height = 580;

    std::vector<double> parameter_vector() const {
        return {static_cast<double>(rows_min), static_cast<double>(rows_max),
                static_cast<double>(cols_min), static_cast<double>(cols_max),
                gutter_mean,                   gutter_jitter,
                margin_mean,                   margin_jitter,
                merge_prob,                    four_panel ? 1.0 : 0.0,
                static_cast<double>(page_width), static_cast<double>(page_height)};
    }
};

inline std::vector<std::pair<int, int>> duplicate_style_pairs(
    const std::vector<SyntheticStyle>& styles) {
    std::vector<std::pair<int, int>> out;
    for (size_t i = 0; i < styles.size(); ++i)
        for (size_t j = i + 1; j < styles.size(); ++j)
            if (styles[i].parameter_vector() == styles[j].parameter_vector())
                out.emplace_back(static_cast<int>(i), static_cast<int>(j));
    return out;
}

namespace detail {

// Evenly spaced cell boundaries: `count` cells in [lo, hi) separated by
// gutter g, remainder pixels absorbed front to back.
inline std::vector<std::pair<int, int>> grid_cells(int lo, int hi, int count, int g) {
    std::vector<std::pair<int, int>> cells;
    const int span = hi - lo;
    const int usable = span - (count - 1) * g;
    if (usable < count * 2) return cells; // parameters leave no room
    const int base = usable / count;
    int rem = usable % count;
    int cursor = lo;
    for (int i = 0; i < count; ++i) {
        const int size = base + (rem > 0 ? 1 : 0);
        if (rem > 0) --rem;
        cells.emplace_back(cursor, cursor + size);
        cursor += size + g;
    }
    return cells;
}

inline int jittered(Rng& rng, double mean, double jitter, int lo) {
    const int j = static_cast<int>(std::llround(jitter));
    const int v = static_cast<int>(std::llround(mean)) +
                  (j > 0 ? static_cast<int>(rng.uniform_int(-j, j)) : 0);
    return std::max(lo, v);
}

inline void half_page_frames(const SyntheticStyle& s, Rng& rng, int hx0, int hx1,
                             int page_height, std::optional<std::array<int, 4>> fixed_margins,
                             std::optional<int> fixed_gutter, int page_index,
                             std::vector<Region>& out) {
    int ml, mt, mr, mb, g;
    if (fixed_margins) {
        ml = (*fixed_margins)[0];
        mt = (*fixed_margins)[1];
        mr = (*fixed_margins)[2];
        mb = (*fixed_margins)[3];
    } else {
        ml = jittered(rng, s.margin_mean, s.margin_jitter, 2);
        mt = jittered(rng, s.margin_mean, s.margin_jitter, 2);
        mr = jittered(rng, s.margin_mean, s.margin_jitter, 2);
        mb = jittered(rng, s.margin_mean, s.margin_jitter, 2);
    }
    g = fixed_gutter ? *fixed_gutter : jittered(rng, s.gutter_mean, s.gutter_jitter, 1);

    int rows, cols;
    if (s.four_panel) {
        rows = 4;
        cols = 1;
    } else {
        rows = static_cast<int>(rng.uniform_int(s.rows_min, s.rows_max));
        cols = static_cast<int>(rng.uniform_int(s.cols_min, s.cols_max));
    }

    int y0 = mt, y1 = page_height - mb;
    if (s.four_panel) {
        // Trim the content box so the four panels come out exactly equal.
        const int usable = (y1 - y0) - 3 * g;
        const int ph = usable / 4;
        y1 = y0 + 4 * ph + 3 * g;
    }
    const auto row_cells = grid_cells(y0, y1, rows, g);
    if (row_cells.empty()) return;

    for (int r = 0; r < static_cast<int>(row_cells.size()); ++r) {
        const auto [ry0, ry1] = row_cells[r];
        auto col_cells = grid_cells(hx0 + ml, hx1 - mr, cols, g);
        if (col_cells.empty()) continue;
        if (!s.four_panel && cols >= 2 && s.merge_prob > 0.0 &&
            rng.uniform_real() < s.merge_prob) {
            const int at = static_cast<int>(rng.uniform_int(0, cols - 2));
            col_cells[at].second = col_cells[at + 1].second;
            col_cells.erase(col_cells.begin() + at + 1);
        }
        for (const auto& [cx0, cx1] : col_cells) {
            Region region;
            region.kind = RegionKind::Frame;
            region.id = "f" + std::to_string(page_index) + "_" + std::to_string(out.size());
            region.box = BBox{cx0, ry0, cx1, ry1};
            out.push_back(std::move(region));
        }
    }
}

} // namespace detail

struct SyntheticCorpus {
    std::vector<BookAnnotation> books;

    // Pages carry no drawn content; the raster for any page is a blank
    // canvas at that page's dimensions.
    ImageU8 page_raster(const std::string& title, int page_index) const {
        for (const auto& b : books) {
            if (b.title != title) continue;
            for (const auto& p : b.pages)
                if (p.index == page_index) return ImageU8(p.width, p.height, 255);
        }
        throw CorpusMissingError("no synthetic page " + title + "/" + std::to_string(page_index));
    }
};

// One book per style, `pages_per_style` facing pages each, frames only.
// Deterministic per seed; duplicate parameter vectors are warned about, not
// fatal.
inline SyntheticCorpus generate_synthetic_corpus(const std::vector<SyntheticStyle>& styles,
                                                 int pages_per_style, uint64_t seed) {
    if (pages_per_style < 10)
        throw ConfigError("pages_per_style must be >= 10 for a meaningful corpus");
    {
        std::set<std::string> ids;
        for (const auto& s : styles)
            if (!ids.insert(s.id).second)
                throw ConfigError("duplicate synthetic style id '" + s.id + "'");
    }
    for (const auto& [i, j] : duplicate_style_pairs(styles))
        std::cerr << "[panelkit] warning: styles '" << styles[i].id << "' and '" << styles[j].id
                  << "' have identical parameter vectors\n";

    SyntheticCorpus corpus;
    for (const auto& style : styles) {
        BookAnnotation book;
        book.title = style.id;
        book.genre = style.four_panel ? "4-panel" : style.genre;
        book.publisher = style.publisher;
        for (int p = 0; p < pages_per_style; ++p) {
            Rng rng(derive_seed(seed, style.id, p));
            PageAnnotation page;
            page.index = p;
            page.width = style.page_width;
            page.height = style.page_height;
            const int half = style.page_width / 2;
            if (style.four_panel) {
                // One margin/gutter draw per page keeps the eight panels of a
                // spread geometrically identical.
                std::array<int, 4> m;
                const int mm = detail::jittered(rng, style.margin_mean, style.margin_jitter, 2);
                const int mv = detail::jittered(rng, style.margin_mean, style.margin_jitter, 2);
                m = {mm, mv, mm, mv};
                const int g = detail::jittered(rng, style.gutter_mean, style.gutter_jitter, 1);
                detail::half_page_frames(style, rng, 0, half, page.height, m, g, p, page.regions);
                detail::half_page_frames(style, rng, half, page.width, page.height, m, g, p,
                                         page.regions);
            } else {
                detail::half_page_frames(style, rng, 0, half, page.height, std::nullopt,
                                         std::nullopt, p, page.regions);
                detail::half_page_frames(style, rng, half, page.width, page.height, std::nullopt,
                                         std::nullopt, p, page.regions);
            }
            book.pages.push_back(std::move(page));
        }
        corpus.books.push_back(std::move(book));
    }
    return corpus;
}

// The stock 12-style set used by the synthetic experiments: grid shape
// carries most of the signal, with near-twin pairs separated only by gutter
// width, margins, or merge rate.
inline std::vector<SyntheticStyle> default_synthetic_styles() {
    std::vector<SyntheticStyle> styles;
    auto grid = [](std::string id, int rows, int cols) {
        SyntheticStyle s;
        s.id = std::move(id);
        s.rows_min = s.rows_max = rows;
        s.cols_min = s.cols_max = cols;
        return s;
    };
    styles.push_back(grid("grid2x2", 2, 2));
    styles.push_back(grid("grid2x3", 2, 3));
    styles.push_back(grid("grid3x2", 3, 2));
    styles.push_back(grid("grid3x3", 3, 3));
    styles.push_back(grid("grid4x2", 4, 2));
    styles.push_back(grid("grid2x4", 2, 4));

    SyntheticStyle yonkoma = grid("yonkoma", 4, 1);
    yonkoma.four_panel = true;
    styles.push_back(yonkoma);

    SyntheticStyle wide_gutter = grid("grid3x3_airy", 3, 3);
    wide_gutter.gutter_mean = 34.0;
    styles.push_back(wide_gutter);

    SyntheticStyle wide_margin = grid("grid2x2_framed", 2, 2);
    wide_margin.margin_mean = 58.0;
    styles.push_back(wide_margin);

    SyntheticStyle merged = grid("grid3x2_merged", 3, 2);
    merged.merge_prob = 0.85;
    styles.push_back(merged);

    SyntheticStyle tall_var = grid("rows_vary", 2, 3);
    tall_var.rows_min = 2;
    tall_var.rows_max = 4;
    tall_var.gutter_mean = 24.0;
    styles.push_back(tall_var);

    SyntheticStyle dense = grid("grid4x3", 4, 3);
    dense.gutter_mean = 10.0;
    dense.margin_mean = 16.0;
    styles.push_back(dense);

    return styles;
}

} // namespace panelkit
