#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "phishrl/corpus.hpp"

namespace phishrl {

struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + tn + fp + fn; }
    bool operator==(const ConfusionMatrix&) const = default;
};

// Label 1 is the positive (phishing) class.
ConfusionMatrix confusion(const std::vector<int>& predictions, const std::vector<int>& labels);

// Exact fraction; den == 0 marks a degenerate metric whose value is 0.
struct Ratio {
    std::uint64_t num = 0;
    std::uint64_t den = 0;

    double value() const { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }
    bool degenerate() const { return den == 0; }
};

// 100 * r rounded half-up to `decimals` places, computed on the exact fraction.
double round_percent(const Ratio& r, int decimals = 2);
std::string format_percent(const Ratio& r, int decimals = 2);
std::string format_percent(double fraction, int decimals = 2);

struct ExactMetrics {
    Ratio accuracy, balanced_accuracy, precision, recall, f1, specificity, fnr, fpr;
};

struct MetricsReport {
    double accuracy = 0.0;
    double balanced_accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double specificity = 0.0;
    double fnr = 0.0;
    double fpr = 0.0;
    bool degenerate = false;                    // some denominator was 0
    std::vector<std::string> degenerate_fields;
    ConfusionMatrix cm;
    ExactMetrics exact;
};

MetricsReport compute_metrics(const ConfusionMatrix& cm);

struct GeneralizationGaps {
    double accuracy_gap = 0.0;
    double f1_gap = 0.0;
};

GeneralizationGaps generalization_gaps(const MetricsReport& train, const MetricsReport& test);

// Trains on the first argument and returns predictions for the second.
using FoldTrainer =
    std::function<std::vector<int>(const std::vector<SampleRecord>& train, const std::vector<SampleRecord>& test)>;

struct CrossValidationResult {
    std::vector<MetricsReport> folds;
    std::vector<std::vector<std::size_t>> fold_indices;  // record indices, ascending
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;  // population
};

// Stratified partition: each class is shuffled with the seed and dealt
// round-robin into k folds, continuing the rotation across classes.
std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<SampleRecord>& records, std::size_t k,
                                                       std::uint64_t seed);

CrossValidationResult cross_validate(const std::vector<SampleRecord>& records, std::size_t k,
                                     const FoldTrainer& train_fn, std::uint64_t seed);

struct ReportRow {
    std::string model_name;
    MetricsReport metrics;
};

// Columns: Model Name, Accuracy, Precision, Recall, F1 Score, FP, FN. Ratios
// are written as percentages with two decimals.
void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows);
std::string format_table_row(const ReportRow& row);
std::string format_table_header();

}  // namespace phishrl
