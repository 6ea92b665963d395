#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "renalwsi/calibration.hpp"
#include "renalwsi/evaluation.hpp"
#include "renalwsi/external_classifier.hpp"
#include "renalwsi/inference.hpp"
#include "renalwsi/tiler.hpp"
#include "renalwsi/visualization.hpp"

namespace renal {

struct ClassifierConfig {
    std::string backend = "oracle"; // oracle | heuristic | external | predictions
    double oracle_softness = 0.0;
    std::string command;             // external backend
    double timeout_seconds = 30.0;   // external backend
    std::string predictions_path;    // predictions backend
};

// Every tunable of the pipeline in one revalidated bundle. Defaults match
// the documented operating point; a JSON config file overrides fields and
// `--set dotted.path=value` overrides individual entries on top of that.
struct PipelineConfig {
    PatchSpec patch;
    int whiteness_cutoff = kDefaultWhitenessCutoff;
    InferenceConfig inference;
    CalibrationGrid grid = CalibrationGrid::defaults();
    BootstrapConfig bootstrap;
    Palette palette = Palette::defaults();
    ClassifierConfig classifier;
    int workers = 1;

    void validate() const; // throws config_error with the offending field
};

PipelineConfig load_pipeline_config(const std::filesystem::path& path);

// Applies `--set key=value` pairs (dotted paths, values parsed as JSON when
// possible) on top of the given config. Throws config_error on unknown keys.
PipelineConfig apply_overrides(const PipelineConfig& base,
                               const std::vector<std::string>& overrides);

std::string pipeline_config_to_json(const PipelineConfig& config);

} // namespace renal
