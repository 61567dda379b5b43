#pragma once

// Metrics and report rendering: accuracy, per-class precision/recall/F1,
// confusion matrices, CSV/aligned-text tables, and JSON serialization.
// Micro accuracy is the headline number; macro averages and the empirical
// majority-class baseline ride along for honesty.

#include <cstdio>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "panelkit/classifier.hpp"
#include "panelkit/corpus.hpp"
#include "panelkit/errors.hpp"

namespace panelkit {

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    int support = 0; // number of true items of this class
};

struct EvalReport {
    TaskKind task = TaskKind::Title104;
    std::string mode_key;           // ablation directory key
    std::string noise_family = "none";
    int noise_range = 0;
    int n_items = 0;
    double accuracy = 0.0;          // micro; the comparable headline number
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double majority_baseline = 0.0; // empirical majority-class share
    std::vector<ClassMetrics> per_class;
    std::vector<std::vector<int>> confusion; // [true][pred]
    std::vector<std::string> class_labels;
    std::string manifest_ref;
    std::string config_hash;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["task"] = to_string(task);
        j["mode"] = mode_key;
        j["noise_family"] = noise_family;
        j["noise_range"] = noise_range;
        j["n_items"] = n_items;
        j["accuracy"] = accuracy;
        j["macro_precision"] = macro_precision;
        j["macro_recall"] = macro_recall;
        j["macro_f1"] = macro_f1;
        j["majority_baseline"] = majority_baseline;
        j["class_labels"] = class_labels;
        j["manifest_ref"] = manifest_ref;
        j["config_hash"] = config_hash;
        nlohmann::json pc = nlohmann::json::array();
        for (const auto& m : per_class)
            pc.push_back({{"precision", m.precision},
                          {"recall", m.recall},
                          {"f1", m.f1},
                          {"support", m.support}});
        j["per_class"] = pc;
        j["confusion"] = confusion;
        return j;
    }
};

// Core metric computation from (true id, predicted id) pairs.
inline EvalReport evaluate_pairs(const std::vector<std::pair<int, int>>& pairs, int class_count) {
    if (pairs.empty()) throw EmptyPredictionsError("no predictions to evaluate");
    if (class_count <= 0) throw ConfigError("class count must be positive");

    EvalReport r;
    r.n_items = static_cast<int>(pairs.size());
    r.confusion.assign(class_count, std::vector<int>(class_count, 0));
    for (const auto& [truth, pred] : pairs) {
        if (truth < 0 || truth >= class_count || pred < 0 || pred >= class_count)
            throw IdOutOfRangeError("prediction pair (" + std::to_string(truth) + ", " +
                                    std::to_string(pred) + ") outside " +
                                    std::to_string(class_count) + " classes");
        ++r.confusion[truth][pred];
    }

    int trace = 0, majority = 0;
    r.per_class.resize(class_count);
    for (int c = 0; c < class_count; ++c) {
        int row = 0, col = 0;
        for (int j = 0; j < class_count; ++j) {
            row += r.confusion[c][j];
            col += r.confusion[j][c];
        }
        trace += r.confusion[c][c];
        majority = std::max(majority, row);
        auto& m = r.per_class[c];
        m.support = row;
        m.precision = col > 0 ? static_cast<double>(r.confusion[c][c]) / col : 0.0;
        m.recall = row > 0 ? static_cast<double>(r.confusion[c][c]) / row : 0.0;
        m.f1 = (m.precision + m.recall) > 0.0
                   ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                   : 0.0; // documented zero-division convention
        r.macro_precision += m.precision;
        r.macro_recall += m.recall;
        r.macro_f1 += m.f1;
    }
    r.accuracy = static_cast<double>(trace) / r.n_items;
    r.majority_baseline = static_cast<double>(majority) / r.n_items;
    r.macro_precision /= class_count;
    r.macro_recall /= class_count;
    r.macro_f1 /= class_count;
    return r;
}

inline EvalReport evaluate(const std::vector<std::pair<int, EnsemblePrediction>>& predictions,
                           int class_count) {
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(predictions.size());
    for (const auto& [truth, pred] : predictions) pairs.emplace_back(truth, pred.final_class);
    return evaluate_pairs(pairs, class_count);
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fixed(double v, int decimals) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

} // namespace detail

// One row per report; 4-decimal values so a re-parse reproduces the printed
// numbers exactly.
inline std::string render_table_csv(const std::vector<EvalReport>& reports) {
    std::ostringstream out;
    out << "task,mode,noise_family,noise_range,n_items,accuracy,macro_precision,macro_recall,"
           "macro_f1,majority_baseline\n";
    for (const auto& r : reports)
        out << to_string(r.task) << ',' << r.mode_key << ',' << r.noise_family << ','
            << r.noise_range << ',' << r.n_items << ',' << detail::fixed(r.accuracy, 4) << ','
            << detail::fixed(r.macro_precision, 4) << ',' << detail::fixed(r.macro_recall, 4) << ','
            << detail::fixed(r.macro_f1, 4) << ',' << detail::fixed(r.majority_baseline, 4) << '\n';
    return out.str();
}

struct TableRow {
    std::string task, mode, noise_family;
    int noise_range = 0, n_items = 0;
    double accuracy = 0.0, macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0,
           majority_baseline = 0.0;
};

inline std::vector<TableRow> parse_table_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("empty table csv");
    std::vector<TableRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 10) throw SchemaError("bad table row: " + line);
        TableRow r;
        r.task = fields[0];
        r.mode = fields[1];
        r.noise_family = fields[2];
        r.noise_range = std::stoi(fields[3]);
        r.n_items = std::stoi(fields[4]);
        r.accuracy = std::stod(fields[5]);
        r.macro_precision = std::stod(fields[6]);
        r.macro_recall = std::stod(fields[7]);
        r.macro_f1 = std::stod(fields[8]);
        r.majority_baseline = std::stod(fields[9]);
        rows.push_back(r);
    }
    return rows;
}

// Aligned text. Noisy experiment groups render with the Noise Type / Noise
// Range / Accuracy column structure; clean reports use mode + summary
// metrics. Two decimals displayed.
inline std::string render_table_text(const std::vector<EvalReport>& reports) {
    std::ostringstream out;
    const bool noisy = std::any_of(reports.begin(), reports.end(),
                                   [](const EvalReport& r) { return r.noise_family != "none"; });
    if (noisy) {
        out << std::left << std::setw(16) << "Noise Type" << std::setw(13) << "Noise Range"
            << "Accuracy\n";
        for (const auto& r : reports)
            out << std::left << std::setw(16) << r.noise_family << std::setw(13) << r.noise_range
                << detail::fixed(r.accuracy, 2) << '\n';
    } else {
        out << std::left << std::setw(24) << "Mode" << std::setw(10) << "Accuracy" << std::setw(11)
            << "Macro-P" << std::setw(11) << "Macro-R" << "Macro-F1\n";
        for (const auto& r : reports)
            out << std::left << std::setw(24) << r.mode_key << std::setw(10)
                << detail::fixed(r.accuracy, 2) << std::setw(11)
                << detail::fixed(r.macro_precision, 2) << std::setw(11)
                << detail::fixed(r.macro_recall, 2) << detail::fixed(r.macro_f1, 2) << '\n';
    }
    return out.str();
}

// Per-class table in the Precision / Recall / F1-score layout.
inline std::string render_class_table(const EvalReport& r) {
    std::ostringstream out;
    out << std::left << std::setw(28) << "Class" << std::setw(12) << "Precision" << std::setw(12)
        << "Recall" << std::setw(12) << "F1-score" << "Support\n";
    for (size_t c = 0; c < r.per_class.size(); ++c) {
        const std::string label =
            c < r.class_labels.size() ? r.class_labels[c] : std::to_string(c);
        const auto& m = r.per_class[c];
        out << std::left << std::setw(28) << label << std::setw(12) << detail::fixed(m.precision, 2)
            << std::setw(12) << detail::fixed(m.recall, 2) << std::setw(12)
            << detail::fixed(m.f1, 2) << m.support << '\n';
    }
    return out.str();
}

inline std::string render_confusion_csv(const EvalReport& r) {
    std::ostringstream out;
    out << "true\\pred";
    const size_t n = r.confusion.size();
    auto label = [&](size_t c) {
        return c < r.class_labels.size() ? r.class_labels[c] : std::to_string(c);
    };
    for (size_t c = 0; c < n; ++c) out << ',' << label(c);
    out << '\n';
    for (size_t t = 0; t < n; ++t) {
        out << label(t);
        for (size_t p = 0; p < n; ++p) out << ',' << r.confusion[t][p];
        out << '\n';
    }
    return out.str();
}

} // namespace panelkit
