#include "renalwsi/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "renalwsi/errors.hpp"
#include "renalwsi/rng.hpp"

namespace renal {

using nlohmann::json;

int ConfusionMatrix::row_sum(int gold_index) const {
    int sum = 0;
    for (int p = 0; p < kNumClasses; ++p) sum += counts[gold_index][p];
    return sum;
}

int ConfusionMatrix::col_sum(int pred_index) const {
    int sum = 0;
    for (int g = 0; g < kNumClasses; ++g) sum += counts[g][pred_index];
    return sum;
}

ConfusionMatrix confusion(std::span<const ClassLabel> golds,
                          std::span<const ClassLabel> preds) {
    if (golds.size() != preds.size()) {
        throw validation_error("confusion: gold/prediction length mismatch (" +
                               std::to_string(golds.size()) + " vs " +
                               std::to_string(preds.size()) + ")");
    }
    if (golds.empty()) throw validation_error("confusion: empty input");

    ConfusionMatrix cm;
    std::array<bool, kNumClasses> seen{};
    for (std::size_t i = 0; i < golds.size(); ++i) {
        ++cm.counts[label_index(golds[i])][label_index(preds[i])];
        seen[label_index(golds[i])] = true;
        seen[label_index(preds[i])] = true;
    }
    cm.total = static_cast<int>(golds.size());
    for (int c = 0; c < kNumClasses; ++c) {
        if (seen[c]) cm.observed.push_back(label_from_index(c));
    }
    return cm;
}

BinaryCounts one_vs_rest(const ConfusionMatrix& cm, ClassLabel c) {
    const int idx = label_index(c);
    BinaryCounts b;
    b.tp = cm.counts[idx][idx];
    b.fn = cm.row_sum(idx) - b.tp;
    b.fp = cm.col_sum(idx) - b.tp;
    b.tn = cm.total - b.tp - b.fn - b.fp;
    return b;
}

ClassMetrics per_class_metrics(const ConfusionMatrix& cm, ClassLabel c) {
    const BinaryCounts b = one_vs_rest(cm, c);
    ClassMetrics m;
    m.accuracy = cm.total > 0
                     ? static_cast<double>(b.tp + b.tn) / static_cast<double>(cm.total)
                     : 0.0;
    if (b.tp + b.fp > 0) {
        m.precision = static_cast<double>(b.tp) / static_cast<double>(b.tp + b.fp);
    } else {
        m.precision_defined = false;
    }
    if (b.tp + b.fn > 0) {
        m.recall = static_cast<double>(b.tp) / static_cast<double>(b.tp + b.fn);
    } else {
        m.recall_defined = false;
    }
    if (m.precision + m.recall > 0) {
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    } else {
        m.f1_defined = false;
    }
    return m;
}

double roc_auc(std::span<const double> scores, std::span<const bool> positives) {
    if (scores.size() != positives.size()) {
        throw validation_error("roc_auc: score/label length mismatch");
    }
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (bool p : positives) n_pos += p ? 1 : 0;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw validation_error("roc_auc undefined: needs at least one positive and one "
                               "negative sample");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Tie-averaged rank sum of the positives (Mann-Whitney U).
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j); // 1-based
        for (std::size_t k = i; k < j; ++k) {
            if (positives[order[k]]) rank_sum_pos += avg_rank;
        }
        i = j;
    }

    const double u = rank_sum_pos -
                     static_cast<double>(n_pos) * static_cast<double>(n_pos + 1) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::vector<RocPoint> roc_points(std::span<const double> scores,
                                 std::span<const bool> positives) {
    if (scores.size() != positives.size()) {
        throw validation_error("roc_points: score/label length mismatch");
    }
    std::size_t n_pos = 0;
    for (bool p : positives) n_pos += p ? 1 : 0;
    const std::size_t n_neg = scores.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw validation_error("roc_points undefined: needs both classes");
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<RocPoint> points;
    points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::size_t tp = 0, fp = 0, i = 0;
    while (i < order.size()) {
        const double t = scores[order[i]];
        while (i < order.size() && scores[order[i]] == t) {
            if (positives[order[i]]) ++tp; else ++fp;
            ++i;
        }
        points.push_back({t, static_cast<double>(fp) / static_cast<double>(n_neg),
                          static_cast<double>(tp) / static_cast<double>(n_pos)});
    }
    return points;
}

void BootstrapConfig::validate() const {
    if (iterations < 1) throw validation_error("bootstrap iterations must be >= 1");
    if (!(lower_percentile >= 0.0 && lower_percentile <= upper_percentile &&
          upper_percentile <= 100.0)) {
        throw validation_error("bootstrap percentiles must satisfy 0 <= lo <= hi <= 100");
    }
}

double percentile(std::vector<double> values, double pct) {
    if (values.empty()) throw validation_error("percentile of empty sample");
    std::sort(values.begin(), values.end());
    const double rank = pct / 100.0 * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(rank);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = rank - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

namespace {

std::vector<SlideEval> resample(std::span<const SlideEval> sample, std::uint64_t seed,
                                int iteration) {
    Xoshiro256ss rng(mix_seed(seed, static_cast<std::uint64_t>(iteration)));
    std::vector<SlideEval> out;
    out.reserve(sample.size());
    for (std::size_t k = 0; k < sample.size(); ++k) {
        out.push_back(sample[rng.bounded(sample.size())]);
    }
    return out;
}

// Runs fn(iteration) over [0, iterations) on a bounded pool; results land in
// iteration order, so scheduling never shows.
void parallel_iterations(int iterations, int workers,
                         const std::function<void(int)>& fn) {
    const int n_threads = std::max(1, std::min(workers, iterations));
    if (n_threads == 1) {
        for (int i = 0; i < iterations; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    auto work = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= iterations) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(work);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace

Interval bootstrap_ci(const std::function<double(std::span<const SlideEval>)>& metric,
                      std::span<const SlideEval> sample, const BootstrapConfig& config,
                      int workers) {
    config.validate();
    if (sample.empty()) throw validation_error("bootstrap over an empty sample");

    std::vector<double> values(static_cast<std::size_t>(config.iterations));
    parallel_iterations(config.iterations, workers, [&](int i) {
        values[static_cast<std::size_t>(i)] = metric(resample(sample, config.seed, i));
    });
    return {percentile(values, config.lower_percentile),
            percentile(values, config.upper_percentile)};
}

namespace {

// Flattened metric vector: per gold-present class {acc,prec,rec,f1,auc},
// then the macro row. Flags are only meaningful for the point estimate.
constexpr int kMetricsPerRow = 5;

std::vector<double> compute_all_metrics(std::span<const SlideEval> records,
                                        std::span<const ClassLabel> class_set,
                                        std::vector<bool>* defined_out) {
    std::vector<ClassLabel> golds, preds;
    golds.reserve(records.size());
    preds.reserve(records.size());
    for (const auto& r : records) {
        golds.push_back(r.gold);
        preds.push_back(r.pred);
    }
    const ConfusionMatrix cm = confusion(golds, preds);

    std::vector<double> values;
    std::vector<bool> defined;
    values.reserve((class_set.size() + 1) * kMetricsPerRow);
    defined.reserve(values.capacity());

    std::array<double, kMetricsPerRow> macro_sum{};
    std::array<bool, kMetricsPerRow> macro_defined;
    macro_defined.fill(true);

    for (const ClassLabel c : class_set) {
        const ClassMetrics m = per_class_metrics(cm, c);

        // Per-class AUC score: the slide's filtered-pool fraction for c.
        double auc = 0.0;
        bool auc_defined = false;
        std::size_t n_pos = 0;
        for (const auto& r : records) n_pos += (r.gold == c) ? 1 : 0;
        if (n_pos > 0 && n_pos < records.size()) {
            std::vector<double> scores;
            std::vector<bool> positives;
            scores.reserve(records.size());
            positives.reserve(records.size());
            for (const auto& r : records) {
                scores.push_back(r.fractions[label_index(c)]);
                positives.push_back(r.gold == c);
            }
            auc = roc_auc(scores, positives);
            auc_defined = true;
        }

        const std::array<double, kMetricsPerRow> row = {m.accuracy, m.precision,
                                                        m.recall, m.f1, auc};
        const std::array<bool, kMetricsPerRow> row_defined = {
            true, m.precision_defined, m.recall_defined, m.f1_defined, auc_defined};
        for (int k = 0; k < kMetricsPerRow; ++k) {
            values.push_back(row[k]);
            defined.push_back(row_defined[k]);
            macro_sum[k] += row[k];
            macro_defined[k] = macro_defined[k] && row_defined[k];
        }
    }
    for (int k = 0; k < kMetricsPerRow; ++k) {
        values.push_back(macro_sum[k] / static_cast<double>(class_set.size()));
        defined.push_back(macro_defined[k]);
    }
    if (defined_out) *defined_out = std::move(defined);
    return values;
}

} // namespace

MetricsReport evaluate_dataset(std::span<const SlideEval> records,
                               const BootstrapConfig& bootstrap, int workers) {
    bootstrap.validate();
    if (records.empty()) throw validation_error("evaluate_dataset: empty input");

    // The macro class set is fixed to the gold-present classes of the full
    // dataset; resamples reuse it even when a class vanishes.
    std::array<bool, kNumClasses> gold_seen{};
    for (const auto& r : records) gold_seen[label_index(r.gold)] = true;
    std::vector<ClassLabel> class_set;
    for (int c = 0; c < kNumClasses; ++c) {
        if (gold_seen[c]) class_set.push_back(label_from_index(c));
    }

    std::vector<bool> defined;
    const std::vector<double> point = compute_all_metrics(records, class_set, &defined);

    const std::size_t n_metrics = point.size();
    std::vector<std::vector<double>> iteration_values(
        static_cast<std::size_t>(bootstrap.iterations));
    parallel_iterations(bootstrap.iterations, workers, [&](int i) {
        iteration_values[static_cast<std::size_t>(i)] =
            compute_all_metrics(resample(records, bootstrap.seed, i), class_set, nullptr);
    });

    std::vector<Interval> intervals(n_metrics);
    std::vector<double> column(static_cast<std::size_t>(bootstrap.iterations));
    for (std::size_t m = 0; m < n_metrics; ++m) {
        for (std::size_t i = 0; i < iteration_values.size(); ++i) {
            column[i] = iteration_values[i][m];
        }
        intervals[m] = {percentile(column, bootstrap.lower_percentile),
                        percentile(column, bootstrap.upper_percentile)};
    }

    auto take_row = [&](std::size_t base) {
        MetricRow row;
        MetricValue* slots[kMetricsPerRow] = {&row.accuracy, &row.precision, &row.recall,
                                              &row.f1, &row.auc};
        for (int k = 0; k < kMetricsPerRow; ++k) {
            slots[k]->value = point[base + k];
            slots[k]->ci_low = intervals[base + k].low;
            slots[k]->ci_high = intervals[base + k].high;
            slots[k]->defined = defined[base + k];
        }
        return row;
    };

    MetricsReport report;
    report.n_slides = static_cast<int>(records.size());
    for (std::size_t ci = 0; ci < class_set.size(); ++ci) {
        report.per_class.emplace_back(class_set[ci], take_row(ci * kMetricsPerRow));
    }
    report.macro = take_row(class_set.size() * kMetricsPerRow);

    std::vector<ClassLabel> golds, preds;
    for (const auto& r : records) {
        golds.push_back(r.gold);
        preds.push_back(r.pred);
    }
    report.cm = confusion(golds, preds);
    return report;
}

namespace {

json metric_value_to_json(const MetricValue& v) {
    return {{"value", v.value},
            {"ci_low", v.ci_low},
            {"ci_high", v.ci_high},
            {"defined", v.defined}};
}

json metric_row_to_json(const MetricRow& row) {
    return {{"accuracy", metric_value_to_json(row.accuracy)},
            {"precision", metric_value_to_json(row.precision)},
            {"recall", metric_value_to_json(row.recall)},
            {"f1", metric_value_to_json(row.f1)},
            {"auc", metric_value_to_json(row.auc)}};
}

} // namespace

std::string metrics_report_to_json(const MetricsReport& report) {
    json per_class = json::array();
    for (const auto& [label, row] : report.per_class) {
        json entry = metric_row_to_json(row);
        entry["class"] = label_name(label);
        per_class.push_back(entry);
    }

    json cm_counts = json::array();
    for (int g = 0; g < kNumClasses; ++g) {
        cm_counts.push_back(report.cm.counts[g]);
    }
    json cm_observed = json::array();
    for (ClassLabel c : report.cm.observed) cm_observed.push_back(label_name(c));

    const json doc = {{"n_slides", report.n_slides},
                      {"per_class", per_class},
                      {"macro", metric_row_to_json(report.macro)},
                      {"confusion",
                       {{"classes", {label_name(label_from_index(0)),
                                     label_name(label_from_index(1)),
                                     label_name(label_from_index(2)),
                                     label_name(label_from_index(3)),
                                     label_name(label_from_index(4))}},
                        {"observed", cm_observed},
                        {"counts", cm_counts}}}};
    return doc.dump(2) + "\n";
}

} // namespace renal
