#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "renalwsi/slide_model.hpp"
#include "renalwsi/tiler.hpp"

namespace renal {

// 5-way probability vector in canonical class order.
struct ClassDistribution {
    std::array<double, kNumClasses> probs{};

    // Throws validation_error unless every entry is in [0,1] and the sum is
    // within 1e-6 of 1.
    void validate() const;

    // Ties resolve to the lowest canonical index.
    int argmax() const;
};

struct PatchPrediction {
    PatchCoord coord;
    ClassLabel label = ClassLabel::Normal;
    double confidence = 0.0;
    ClassDistribution probs;
};

// Validates the distribution and derives label/confidence from it.
PatchPrediction make_prediction(PatchCoord coord, const ClassDistribution& dist);

// Patch classification contract. Implementations must either be safe to call
// from multiple threads or serialize internally; all backends in this
// project satisfy that.
class PatchClassifier {
public:
    virtual ~PatchClassifier() = default;
    virtual ClassDistribution classify(const Patch& patch) = 0;
    virtual std::string name() const = 0;
};

// Per-pixel ground-truth labels; -1 marks unlabeled background.
class GroundTruthMap {
public:
    GroundTruthMap(int width, int height)
        : width_(width), height_(height),
          labels_(static_cast<std::size_t>(width) * height, -1) {}

    // Paints Normal regions first, then tumor regions, each in list order,
    // so tumor labels win where a tumor box sits inside normal tissue.
    static GroundTruthMap from_annotations(int width, int height,
                                           std::span<const RegionAnnotation> annotations);

    void paint(const RegionAnnotation& region);

    int label_at(int x, int y) const {
        return labels_[static_cast<std::size_t>(y) * width_ + x];
    }
    int width() const { return width_; }
    int height() const { return height_; }

    // Pixel count per class, plus total labeled pixels.
    std::array<std::int64_t, kNumClasses> class_areas() const;

private:
    int width_;
    int height_;
    std::vector<std::int8_t> labels_;
};

// Test/verification backend: reads the ground truth under the patch
// footprint instead of the pixels. The majority label gets 1 - softness,
// the rest of the mass spreads uniformly over the other four classes.
// Footprints with no labeled pixel fall back to Normal.
class OracleClassifier : public PatchClassifier {
public:
    explicit OracleClassifier(const GroundTruthMap& truth, double softness = 0.0);

    ClassDistribution classify(const Patch& patch) override;
    std::string name() const override { return "oracle"; }

private:
    const GroundTruthMap& truth_;
    double softness_;
};

// Integration-realism backend for synthetic slides: nearest base color of
// the mean patch RGB, softened by distance.
class HeuristicColorClassifier : public PatchClassifier {
public:
    ClassDistribution classify(const Patch& patch) override;
    std::string name() const override { return "heuristic"; }
};

// One prediction JSONL row: {"slide_id","x","y","probs":[p0..p4]}.
struct PredictionRecord {
    std::string slide_id;
    PatchPrediction pred;
};

// Loads and revalidates offline predictions; label/confidence are recomputed
// from the probabilities, never trusted from the file.
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);

void write_predictions_jsonl(std::ostream& out, const std::string& slide_id,
                             std::span<const PatchPrediction> predictions);

} // namespace renal
