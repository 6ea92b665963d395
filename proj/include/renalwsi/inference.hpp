#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "renalwsi/classifier.hpp"
#include "renalwsi/slide_model.hpp"
#include "renalwsi/tiler.hpp"

namespace renal {

struct InferenceConfig {
    double confidence_threshold = 0.9;
    double min_tumor_fraction = 0.05;

    void validate() const;
    bool operator==(const InferenceConfig&) const = default;
};

using ClassFractions = std::array<double, kNumClasses>;

// Keeps exactly the predictions with confidence >= threshold, preserving
// order; predictions strictly below the threshold are removed.
std::vector<PatchPrediction> filter_low_confidence(
    std::span<const PatchPrediction> pool, double threshold);

// fraction[c] = count(label == c) / pool size; all zeros for an empty pool.
ClassFractions class_fractions(std::span<const PatchPrediction> pool);

// A tumor class wins only when its fraction strictly exceeds
// min_tumor_fraction and it holds the largest tumor share (ties resolve to
// canonical order). The Normal fraction never triggers a tumor label.
ClassLabel decide_label(const ClassFractions& fractions, const InferenceConfig& config);

struct SlideDecision {
    ClassLabel label = ClassLabel::Normal;
    ClassFractions fractions{};        // over the filtered pool
    int pool_size_raw = 0;
    int pool_size_filtered = 0;        // 0 flags a slide with no confident evidence
    InferenceConfig config_used;
};

// filter -> fractions -> decide, with audit counts.
SlideDecision aggregate_pool(std::span<const PatchPrediction> raw_pool,
                             const InferenceConfig& config);

struct SlideInference {
    SlideDecision decision;
    std::vector<PatchPrediction> retained; // filtered pool, for scoring/overlay
};

// Full per-slide pipeline: extract tissue patches, classify (fanning out
// over `workers` threads; result order is schedule-independent), aggregate.
SlideInference infer_slide(const SlideImage& slide, const TissueMask& mask,
                           const PatchSpec& spec, PatchClassifier& classifier,
                           const InferenceConfig& config, int workers = 1);

// Classify a patch list with a bounded worker pool; output order matches the
// input order regardless of scheduling.
std::vector<PatchPrediction> classify_patches(std::span<const Patch> patches,
                                              PatchClassifier& classifier,
                                              int workers = 1);

// Decision JSONL row:
// {"slide_id","label","fractions":{class:frac},"pool_size_raw",
//  "pool_size_filtered","config":{...}}.
struct DecisionRecord {
    std::string slide_id;
    SlideDecision decision;
};

void write_decisions_jsonl(std::ostream& out, std::span<const DecisionRecord> records);
std::vector<DecisionRecord> load_decisions(const std::filesystem::path& path);

} // namespace renal
