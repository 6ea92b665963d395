#include "renalwsi/calibration.hpp"

#include <atomic>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "renalwsi/errors.hpp"
#include "renalwsi/evaluation.hpp"

namespace renal {

using nlohmann::json;

CalibrationGrid CalibrationGrid::defaults() {
    CalibrationGrid grid;
    for (int i = 50; i <= 95; i += 5) {
        grid.confidence_values.push_back(static_cast<double>(i) / 100.0);
    }
    grid.confidence_values.push_back(0.99);
    for (int i = 1; i <= 20; ++i) {
        grid.fraction_values.push_back(static_cast<double>(i) / 100.0);
    }
    return grid;
}

void CalibrationGrid::validate() const {
    auto check_axis = [](const std::vector<double>& values, const char* name) {
        if (values.empty()) {
            throw validation_error(std::string("calibration grid: ") + name +
                                   " must be nonempty");
        }
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!(values[i] >= 0.0 && values[i] <= 1.0)) {
                throw validation_error(std::string("calibration grid: ") + name +
                                       " values must be in [0,1]");
            }
            if (i > 0 && !(values[i] > values[i - 1])) {
                throw validation_error(std::string("calibration grid: ") + name +
                                       " must be strictly increasing");
            }
        }
    };
    check_axis(confidence_values, "confidence_values");
    check_axis(fraction_values, "fraction_values");
}

namespace {

// Macro F1 over the gold-present classes, flagged-zero rules included.
double macro_f1_against_gold(std::span<const ClassLabel> golds,
                             std::span<const ClassLabel> preds) {
    const ConfusionMatrix cm = confusion(golds, preds);
    std::array<bool, kNumClasses> gold_seen{};
    for (const ClassLabel g : golds) gold_seen[label_index(g)] = true;

    double sum = 0.0;
    int n = 0;
    for (int c = 0; c < kNumClasses; ++c) {
        if (!gold_seen[c]) continue;
        sum += per_class_metrics(cm, label_from_index(c)).f1;
        ++n;
    }
    return sum / static_cast<double>(n);
}

} // namespace

CalibrationResult calibrate(std::span<const DevSlidePool> dev,
                            const CalibrationGrid& grid, int workers) {
    grid.validate();
    if (dev.empty()) throw calibration_error("calibration needs a nonempty dev set");
    if (workers < 1) throw validation_error("workers must be >= 1");

    std::vector<ClassLabel> golds;
    golds.reserve(dev.size());
    for (const auto& slide : dev) golds.push_back(slide.gold);

    const std::size_t n_cells = grid.confidence_values.size() * grid.fraction_values.size();
    std::vector<CalibrationCell> table(n_cells);

    auto evaluate_cell = [&](std::size_t cell) {
        const std::size_t ci = cell / grid.fraction_values.size();
        const std::size_t fi = cell % grid.fraction_values.size();
        const InferenceConfig config{grid.confidence_values[ci],
                                     grid.fraction_values[fi]};
        std::vector<ClassLabel> preds;
        preds.reserve(dev.size());
        for (const auto& slide : dev) {
            preds.push_back(aggregate_pool(slide.pool, config).label);
        }
        table[cell] = {config.confidence_threshold, config.min_tumor_fraction,
                       macro_f1_against_gold(golds, preds)};
    };

    const int n_threads =
        static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), n_cells));
    if (n_threads == 1) {
        for (std::size_t cell = 0; cell < n_cells; ++cell) evaluate_cell(cell);
    } else {
        std::atomic<std::size_t> next{0};
        std::mutex error_mutex;
        std::exception_ptr first_error;
        auto work = [&] {
            for (;;) {
                const std::size_t cell = next.fetch_add(1);
                if (cell >= n_cells) return;
                try {
                    evaluate_cell(cell);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> threads;
        for (int t = 0; t < n_threads; ++t) threads.emplace_back(work);
        for (auto& t : threads) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    // Strict improvement scan in table order = lowest confidence first, then
    // lowest fraction, exactly the tie-breaking contract.
    std::size_t best = 0;
    for (std::size_t cell = 1; cell < n_cells; ++cell) {
        if (table[cell].macro_f1 > table[best].macro_f1) best = cell;
    }

    CalibrationResult result;
    result.best_config = {table[best].confidence, table[best].fraction};
    result.objective = table[best].macro_f1;
    result.table = std::move(table);
    return result;
}

std::string calibration_result_to_json(const CalibrationResult& result) {
    json cells = json::array();
    for (const auto& cell : result.table) {
        cells.push_back({{"confidence", cell.confidence},
                         {"fraction", cell.fraction},
                         {"macro_f1", cell.macro_f1}});
    }
    const json doc = {
        {"best_config",
         {{"confidence_threshold", result.best_config.confidence_threshold},
          {"min_tumor_fraction", result.best_config.min_tumor_fraction}}},
        {"objective", result.objective},
        {"table", cells}};
    return doc.dump(2) + "\n";
}

} // namespace renal
