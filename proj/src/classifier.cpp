#include "renalwsi/classifier.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "renalwsi/class_colors.hpp"
#include "renalwsi/errors.hpp"

namespace renal {

using nlohmann::json;

void ClassDistribution::validate() const {
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw validation_error("class probability out of [0,1]: " +
                                   std::to_string(p));
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        throw validation_error("class probabilities sum to " + std::to_string(sum) +
                               ", expected 1");
    }
}

int ClassDistribution::argmax() const {
    int best = 0;
    for (int i = 1; i < kNumClasses; ++i) {
        if (probs[i] > probs[best]) best = i;
    }
    return best;
}

PatchPrediction make_prediction(PatchCoord coord, const ClassDistribution& dist) {
    dist.validate();
    PatchPrediction pred;
    pred.coord = coord;
    pred.probs = dist;
    const int idx = dist.argmax();
    pred.label = label_from_index(idx);
    pred.confidence = dist.probs[idx];
    return pred;
}

GroundTruthMap GroundTruthMap::from_annotations(
    int width, int height, std::span<const RegionAnnotation> annotations) {
    GroundTruthMap map(width, height);
    for (const auto& region : annotations) {
        if (!is_tumor(region.label)) map.paint(region);
    }
    for (const auto& region : annotations) {
        if (is_tumor(region.label)) map.paint(region);
    }
    return map;
}

void GroundTruthMap::paint(const RegionAnnotation& region) {
    if (region.x0 < 0 || region.y0 < 0 || region.x1 > width_ || region.y1 > height_ ||
        region.x0 >= region.x1 || region.y0 >= region.y1) {
        throw validation_error("annotation bbox out of bounds for ground-truth map");
    }
    const std::int8_t value = static_cast<std::int8_t>(label_index(region.label));
    for (int y = region.y0; y < region.y1; ++y) {
        std::int8_t* row = labels_.data() + static_cast<std::size_t>(y) * width_;
        std::fill(row + region.x0, row + region.x1, value);
    }
}

std::array<std::int64_t, kNumClasses> GroundTruthMap::class_areas() const {
    std::array<std::int64_t, kNumClasses> areas{};
    for (std::int8_t v : labels_) {
        if (v >= 0) ++areas[v];
    }
    return areas;
}

OracleClassifier::OracleClassifier(const GroundTruthMap& truth, double softness)
    : truth_(truth), softness_(softness) {
    if (!(softness >= 0.0 && softness < 1.0)) {
        throw validation_error("oracle softness must be in [0,1)");
    }
}

ClassDistribution OracleClassifier::classify(const Patch& patch) {
    if (patch.coord.x < 0 || patch.coord.y < 0 ||
        patch.coord.x + patch.size > truth_.width() ||
        patch.coord.y + patch.size > truth_.height()) {
        throw classification_error("patch footprint outside ground-truth map at (" +
                                   std::to_string(patch.coord.x) + "," +
                                   std::to_string(patch.coord.y) + ")");
    }
    std::array<std::int64_t, kNumClasses> counts{};
    for (int dy = 0; dy < patch.size; ++dy) {
        for (int dx = 0; dx < patch.size; ++dx) {
            const int v = truth_.label_at(patch.coord.x + dx, patch.coord.y + dy);
            if (v >= 0) ++counts[v];
        }
    }
    int winner = 0; // Normal fallback when the footprint has no labeled pixel
    for (int i = 1; i < kNumClasses; ++i) {
        if (counts[i] > counts[winner]) winner = i;
    }

    ClassDistribution dist;
    dist.probs.fill(softness_ / (kNumClasses - 1));
    dist.probs[winner] = 1.0 - softness_;
    return dist;
}

ClassDistribution HeuristicColorClassifier::classify(const Patch& patch) {
    if (patch.pixels.empty()) {
        throw classification_error("heuristic backend needs patch pixels at (" +
                                   std::to_string(patch.coord.x) + "," +
                                   std::to_string(patch.coord.y) + ")");
    }
    double mean[3] = {0, 0, 0};
    const std::size_t n = patch.pixels.size() / 3;
    for (std::size_t i = 0; i < patch.pixels.size(); i += 3) {
        mean[0] += patch.pixels.pixels[i];
        mean[1] += patch.pixels.pixels[i + 1];
        mean[2] += patch.pixels.pixels[i + 2];
    }
    for (double& m : mean) m /= static_cast<double>(n);

    // exp(-distance/8) sharpens near-exact color matches to ~1.0 while
    // degrading smoothly for off-palette input.
    ClassDistribution dist;
    double sum = 0.0;
    for (int c = 0; c < kNumClasses; ++c) {
        double d2 = 0.0;
        for (int ch = 0; ch < 3; ++ch) {
            const double diff = mean[ch] - kClassBaseColor[c][ch];
            d2 += diff * diff;
        }
        dist.probs[c] = std::exp(-std::sqrt(d2) / 8.0);
        sum += dist.probs[c];
    }
    for (double& p : dist.probs) p /= sum;
    return dist;
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open predictions file '" + path.string() + "'");

    std::vector<PredictionRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json row;
        try {
            row = json::parse(line);
        } catch (const json::parse_error& e) {
            throw format_error("predictions line " + std::to_string(line_no) + " in '" +
                               path.string() + "': " + e.what());
        }
        PredictionRecord rec;
        try {
            rec.slide_id = row.at("slide_id").get<std::string>();
            const auto& probs = row.at("probs");
            if (!probs.is_array() || probs.size() != kNumClasses) {
                throw format_error("predictions line " + std::to_string(line_no) +
                                   " in '" + path.string() + "': probs must hold " +
                                   std::to_string(kNumClasses) + " values");
            }
            ClassDistribution dist;
            for (int i = 0; i < kNumClasses; ++i) dist.probs[i] = probs[i].get<double>();
            rec.pred = make_prediction({row.at("x").get<int>(), row.at("y").get<int>()},
                                       dist);
        } catch (const json::exception& e) {
            throw format_error("predictions line " + std::to_string(line_no) + " in '" +
                               path.string() + "': " + e.what());
        } catch (const validation_error& e) {
            throw validation_error("predictions line " + std::to_string(line_no) +
                                   " in '" + path.string() + "': " + e.what());
        }
        records.push_back(std::move(rec));
    }
    return records;
}

void write_predictions_jsonl(std::ostream& out, const std::string& slide_id,
                             std::span<const PatchPrediction> predictions) {
    for (const auto& pred : predictions) {
        const json row = {{"slide_id", slide_id},
                          {"x", pred.coord.x},
                          {"y", pred.coord.y},
                          {"probs", pred.probs.probs}};
        out << row.dump() << "\n";
    }
}

} // namespace renal
