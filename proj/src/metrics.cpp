#include "phishrl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "phishrl/csv.hpp"
#include "phishrl/errors.hpp"
#include "phishrl/rng.hpp"

namespace phishrl {

namespace {

std::uint64_t pow10(int n) {
    std::uint64_t p = 1;
    for (int i = 0; i < n; ++i) p *= 10;
    return p;
}

// floor(100 * 10^d * num / den + 1/2), exact in 128-bit arithmetic.
std::uint64_t scaled_percent(const Ratio& r, int decimals) {
    if (r.den == 0) return 0;
    const unsigned __int128 scaled = static_cast<unsigned __int128>(r.num) * 100u * pow10(decimals);
    return static_cast<std::uint64_t>((2 * scaled + r.den) / (2 * static_cast<unsigned __int128>(r.den)));
}

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

}  // namespace

ConfusionMatrix confusion(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.size() != labels.size()) {
        throw LengthMismatch("predictions (" + std::to_string(predictions.size()) + ") and labels (" +
                             std::to_string(labels.size()) + ") differ in length");
    }
    if (predictions.empty()) throw std::invalid_argument("confusion matrix needs at least one sample");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const int p = predictions[i];
        const int y = labels[i];
        if ((p != 0 && p != 1) || (y != 0 && y != 1)) throw std::invalid_argument("predictions and labels must be 0 or 1");
        if (p == 1 && y == 1) ++cm.tp;
        else if (p == 0 && y == 0) ++cm.tn;
        else if (p == 1) ++cm.fp;
        else ++cm.fn;
    }
    return cm;
}

double round_percent(const Ratio& r, int decimals) {
    return static_cast<double>(scaled_percent(r, decimals)) / static_cast<double>(pow10(decimals));
}

std::string format_percent(const Ratio& r, int decimals) {
    const std::uint64_t v = scaled_percent(r, decimals);
    const std::uint64_t p = pow10(decimals);
    std::string out = std::to_string(v / p);
    if (decimals > 0) {
        std::string frac = std::to_string(v % p);
        out += '.' + std::string(static_cast<std::size_t>(decimals) - frac.size(), '0') + frac;
    }
    return out;
}

std::string format_percent(double fraction, int decimals) { return fixed(100.0 * fraction, decimals); }

MetricsReport compute_metrics(const ConfusionMatrix& cm) {
    const std::uint64_t pos = cm.tp + cm.fn;
    const std::uint64_t neg = cm.tn + cm.fp;
    MetricsReport r;
    r.cm = cm;
    auto& e = r.exact;
    e.accuracy = {cm.tp + cm.tn, cm.total()};
    e.precision = {cm.tp, cm.tp + cm.fp};
    e.recall = {cm.tp, pos};
    e.specificity = {cm.tn, neg};
    e.fnr = {cm.fn, pos};
    e.fpr = {cm.fp, neg};
    e.f1 = {2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn};
    // (tp/pos + tn/neg) / 2 over a common denominator.
    if (pos && neg) {
        e.balanced_accuracy = {cm.tp * neg + cm.tn * pos, 2 * pos * neg};
    } else {
        e.balanced_accuracy = {0, 0};
    }

    r.accuracy = e.accuracy.value();
    r.precision = e.precision.value();
    r.recall = e.recall.value();
    r.specificity = e.specificity.value();
    r.f1 = e.f1.value();
    r.balanced_accuracy = pos && neg ? (r.recall + r.specificity) / 2.0 : 0.0;
    r.fnr = pos ? 1.0 - r.recall : 0.0;
    r.fpr = neg ? 1.0 - r.specificity : 0.0;

    const std::pair<const char*, const Ratio*> fields[] = {
        {"accuracy", &e.accuracy}, {"balanced_accuracy", &e.balanced_accuracy},
        {"precision", &e.precision}, {"recall", &e.recall},
        {"f1", &e.f1}, {"specificity", &e.specificity},
        {"fnr", &e.fnr}, {"fpr", &e.fpr},
    };
    for (const auto& [name, ratio] : fields) {
        if (ratio->degenerate()) r.degenerate_fields.emplace_back(name);
    }
    r.degenerate = !r.degenerate_fields.empty();
    return r;
}

GeneralizationGaps generalization_gaps(const MetricsReport& train, const MetricsReport& test) {
    return {train.accuracy - test.accuracy, train.f1 - test.f1};
}

std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<SampleRecord>& records, std::size_t k,
                                                       std::uint64_t seed) {
    if (k < 2) throw DegenerateFold("cross-validation needs k >= 2");
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < records.size(); ++i) {
        const int y = records[i].label;
        if (y != 0 && y != 1) throw std::invalid_argument("labels must be 0 or 1");
        by_class[y].push_back(i);
    }
    for (int c = 0; c < 2; ++c) {
        if (by_class[c].size() < k) {
            throw DegenerateFold("class " + std::to_string(c) + " has " + std::to_string(by_class[c].size()) +
                                 " samples, fewer than k = " + std::to_string(k));
        }
    }
    Rng rng(seed);
    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t next = 0;
    for (auto& members : by_class) {
        for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.uniform_index(i)]);
        for (const std::size_t idx : members) folds[next++ % k].push_back(idx);
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

CrossValidationResult cross_validate(const std::vector<SampleRecord>& records, std::size_t k,
                                     const FoldTrainer& train_fn, std::uint64_t seed) {
    CrossValidationResult result;
    result.fold_indices = stratified_folds(records, k, seed);
    for (std::size_t f = 0; f < k; ++f) {
        const auto& held = result.fold_indices[f];
        std::vector<bool> in_test(records.size(), false);
        for (const std::size_t i : held) in_test[i] = true;
        std::vector<SampleRecord> train, test;
        std::vector<int> labels;
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (in_test[i]) {
                test.push_back(records[i]);
                labels.push_back(records[i].label);
            } else {
                train.push_back(records[i]);
            }
        }
        const auto preds = train_fn(train, test);
        result.folds.push_back(compute_metrics(confusion(preds, labels)));
    }
    double sum = 0.0;
    for (const auto& r : result.folds) sum += r.accuracy;
    result.mean_accuracy = sum / static_cast<double>(k);
    double sq = 0.0;
    for (const auto& r : result.folds) sq += (r.accuracy - result.mean_accuracy) * (r.accuracy - result.mean_accuracy);
    result.std_accuracy = std::sqrt(sq / static_cast<double>(k));
    return result;
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
    csv::write_row(out, {"Model Name", "Accuracy", "Precision", "Recall", "F1 Score", "FP", "FN"});
    for (const auto& row : rows) {
        const auto& e = row.metrics.exact;
        csv::write_row(out, {row.model_name, format_percent(e.accuracy), format_percent(e.precision),
                             format_percent(e.recall), format_percent(e.f1), std::to_string(row.metrics.cm.fp),
                             std::to_string(row.metrics.cm.fn)});
    }
}

std::string format_table_header() {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-40s %9s %10s %8s %9s %7s %7s", "Model Name", "Accuracy", "Precision", "Recall",
                  "F1 Score", "FP", "FN");
    return buf;
}

std::string format_table_row(const ReportRow& row) {
    const auto& e = row.metrics.exact;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-40s %9s %10s %8s %9s %7llu %7llu", row.model_name.c_str(),
                  format_percent(e.accuracy).c_str(), format_percent(e.precision).c_str(),
                  format_percent(e.recall).c_str(), format_percent(e.f1).c_str(),
                  static_cast<unsigned long long>(row.metrics.cm.fp), static_cast<unsigned long long>(row.metrics.cm.fn));
    return buf;
}

}  // namespace phishrl
