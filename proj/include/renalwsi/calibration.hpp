#pragma once

#include <span>
#include <string>
#include <vector>

#include "renalwsi/inference.hpp"

namespace renal {

// Joint grid over the confidence threshold and the tumor-fraction threshold.
struct CalibrationGrid {
    std::vector<double> confidence_values;
    std::vector<double> fraction_values;

    // 0.50..0.95 step 0.05 plus 0.99; 0.01..0.20 step 0.01.
    static CalibrationGrid defaults();
    void validate() const;
};

struct CalibrationCell {
    double confidence = 0.0;
    double fraction = 0.0;
    double macro_f1 = 0.0;
};

struct CalibrationResult {
    InferenceConfig best_config;
    double objective = 0.0; // macro F1 of best_config on the dev set
    std::vector<CalibrationCell> table; // confidence outer, fraction inner
};

// One dev-set slide: its raw (unfiltered) prediction pool plus gold label.
// Pools are classified once; each grid cell only re-runs the aggregation.
struct DevSlidePool {
    std::string slide_id;
    std::vector<PatchPrediction> pool;
    ClassLabel gold = ClassLabel::Normal;
};

// Exhaustive grid search maximizing macro F1 of the slide decisions against
// the gold labels. Ties resolve to the lowest confidence value, then the
// lowest fraction value. Throws calibration_error on an empty dev set.
CalibrationResult calibrate(std::span<const DevSlidePool> dev,
                            const CalibrationGrid& grid, int workers = 1);

std::string calibration_result_to_json(const CalibrationResult& result);

} // namespace renal
