#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "renalwsi/inference.hpp"
#include "renalwsi/labels.hpp"

namespace renal {

// Rows are gold labels, columns predictions, both in canonical order.
struct ConfusionMatrix {
    std::array<std::array<int, kNumClasses>, kNumClasses> counts{};
    int total = 0;
    // Union of labels observed in golds or predictions, canonical order.
    std::vector<ClassLabel> observed;

    int row_sum(int gold_index) const;
    int col_sum(int pred_index) const;
};

ConfusionMatrix confusion(std::span<const ClassLabel> golds,
                          std::span<const ClassLabel> preds);

// One-vs-rest counts for a single class.
struct BinaryCounts {
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

BinaryCounts one_vs_rest(const ConfusionMatrix& cm, ClassLabel c);

// Zero denominators yield value 0 with the corresponding defined flag
// cleared, never an exception, so bootstrap resamples cannot crash.
struct ClassMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool precision_defined = true;
    bool recall_defined = true;
    bool f1_defined = true;
};

ClassMetrics per_class_metrics(const ConfusionMatrix& cm, ClassLabel c);

// Mann-Whitney AUC: (concordant + 0.5 * tied) / (positives * negatives),
// computed via tie-averaged ranks. Throws validation_error when either class
// is absent.
double roc_auc(std::span<const double> scores, std::span<const bool> positives);

struct RocPoint {
    double threshold = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};

// Stepwise ROC curve; first point is the infinite threshold at (0,0).
std::vector<RocPoint> roc_points(std::span<const double> scores,
                                 std::span<const bool> positives);

struct BootstrapConfig {
    int iterations = 10000;
    std::uint64_t seed = 0;
    double lower_percentile = 2.5;
    double upper_percentile = 97.5;

    void validate() const;
};

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

// Per-slide evaluation record: the resampling unit is the whole slide.
struct SlideEval {
    ClassLabel gold = ClassLabel::Normal;
    ClassLabel pred = ClassLabel::Normal;
    // Filtered-pool class fractions; the per-class continuous score used for
    // ROC/AUC.
    ClassFractions fractions{};
};

// Empirical percentile with linear interpolation between order statistics:
// rank r = p/100 * (n-1), value = lerp(x[floor(r)], x[ceil(r)]).
double percentile(std::vector<double> values, double pct);

// Resamples `sample` with replacement (same size) `iterations` times and
// returns the percentile interval of the metric. Iteration i draws its
// indices from an independent substream seeded with mix_seed(seed, i), so
// results are identical for any worker count.
Interval bootstrap_ci(const std::function<double(std::span<const SlideEval>)>& metric,
                      std::span<const SlideEval> sample, const BootstrapConfig& config,
                      int workers = 1);

struct MetricValue {
    double value = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    bool defined = true; // cleared by the zero-denominator rules
};

struct MetricRow {
    MetricValue accuracy, precision, recall, f1, auc;
};

struct MetricsReport {
    int n_slides = 0;
    // Rows for the classes present among the gold labels, canonical order.
    std::vector<std::pair<ClassLabel, MetricRow>> per_class;
    // Unweighted mean over the gold-present classes.
    MetricRow macro;
    ConfusionMatrix cm;
};

MetricsReport evaluate_dataset(std::span<const SlideEval> records,
                               const BootstrapConfig& bootstrap, int workers = 1);

std::string metrics_report_to_json(const MetricsReport& report);

} // namespace renal
