#include "renalwsi/inference.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "renalwsi/errors.hpp"

namespace renal {

using nlohmann::json;

void InferenceConfig::validate() const {
    if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0)) {
        throw validation_error("confidence_threshold must be in [0,1]");
    }
    if (!(min_tumor_fraction >= 0.0 && min_tumor_fraction <= 1.0)) {
        throw validation_error("min_tumor_fraction must be in [0,1]");
    }
}

std::vector<PatchPrediction> filter_low_confidence(
    std::span<const PatchPrediction> pool, double threshold) {
    std::vector<PatchPrediction> kept;
    kept.reserve(pool.size());
    for (const auto& pred : pool) {
        if (pred.confidence >= threshold) kept.push_back(pred);
    }
    return kept;
}

ClassFractions class_fractions(std::span<const PatchPrediction> pool) {
    ClassFractions fractions{};
    if (pool.empty()) return fractions;
    for (const auto& pred : pool) fractions[label_index(pred.label)] += 1.0;
    for (double& f : fractions) f /= static_cast<double>(pool.size());
    return fractions;
}

ClassLabel decide_label(const ClassFractions& fractions, const InferenceConfig& config) {
    config.validate();
    int winner = -1;
    double best = 0.0;
    for (int c = 0; c < kNumClasses; ++c) {
        if (!is_tumor(label_from_index(c))) continue;
        if (winner < 0 || fractions[c] > best) {
            winner = c;
            best = fractions[c];
        }
    }
    // Strict inequality: a tumor share of exactly min_tumor_fraction stays Normal.
    if (winner >= 0 && best > config.min_tumor_fraction) return label_from_index(winner);
    return ClassLabel::Normal;
}

SlideDecision aggregate_pool(std::span<const PatchPrediction> raw_pool,
                             const InferenceConfig& config) {
    config.validate();
    const std::vector<PatchPrediction> kept =
        filter_low_confidence(raw_pool, config.confidence_threshold);

    SlideDecision decision;
    decision.pool_size_raw = static_cast<int>(raw_pool.size());
    decision.pool_size_filtered = static_cast<int>(kept.size());
    decision.fractions = class_fractions(kept);
    decision.label = decide_label(decision.fractions, config);
    decision.config_used = config;
    return decision;
}

std::vector<PatchPrediction> classify_patches(std::span<const Patch> patches,
                                              PatchClassifier& classifier,
                                              int workers) {
    if (workers < 1) throw validation_error("workers must be >= 1");

    std::vector<PatchPrediction> predictions(patches.size());
    if (patches.empty()) return predictions;

    const int n_threads = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(workers), patches.size()));

    if (n_threads == 1) {
        for (std::size_t i = 0; i < patches.size(); ++i) {
            predictions[i] =
                make_prediction(patches[i].coord, classifier.classify(patches[i]));
        }
        return predictions;
    }

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= patches.size()) return;
            try {
                predictions[i] =
                    make_prediction(patches[i].coord, classifier.classify(patches[i]));
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
    return predictions;
}

SlideInference infer_slide(const SlideImage& slide, const TissueMask& mask,
                           const PatchSpec& spec, PatchClassifier& classifier,
                           const InferenceConfig& config, int workers) {
    const std::vector<Patch> patches = extract_patches(slide, mask, spec);
    const std::vector<PatchPrediction> pool =
        classify_patches(patches, classifier, workers);

    SlideInference result;
    result.decision = aggregate_pool(pool, config);
    result.retained = filter_low_confidence(pool, config.confidence_threshold);
    return result;
}

namespace {

json fractions_to_json(const ClassFractions& fractions) {
    json obj = json::object();
    for (int c = 0; c < kNumClasses; ++c) {
        obj[std::string(label_name(label_from_index(c)))] = fractions[c];
    }
    return obj;
}

} // namespace

void write_decisions_jsonl(std::ostream& out, std::span<const DecisionRecord> records) {
    for (const auto& rec : records) {
        const json row = {
            {"slide_id", rec.slide_id},
            {"label", label_name(rec.decision.label)},
            {"fractions", fractions_to_json(rec.decision.fractions)},
            {"pool_size_raw", rec.decision.pool_size_raw},
            {"pool_size_filtered", rec.decision.pool_size_filtered},
            {"config",
             {{"confidence_threshold", rec.decision.config_used.confidence_threshold},
              {"min_tumor_fraction", rec.decision.config_used.min_tumor_fraction}}}};
        out << row.dump() << "\n";
    }
}

std::vector<DecisionRecord> load_decisions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open decisions file '" + path.string() + "'");

    std::vector<DecisionRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const json row = json::parse(line);
            DecisionRecord rec;
            rec.slide_id = row.at("slide_id").get<std::string>();
            rec.decision.label = parse_label(row.at("label").get<std::string>());
            const auto& fractions = row.at("fractions");
            for (int c = 0; c < kNumClasses; ++c) {
                rec.decision.fractions[c] =
                    fractions.at(std::string(label_name(label_from_index(c))))
                        .get<double>();
            }
            rec.decision.pool_size_raw = row.at("pool_size_raw").get<int>();
            rec.decision.pool_size_filtered = row.at("pool_size_filtered").get<int>();
            const auto& cfg = row.at("config");
            rec.decision.config_used.confidence_threshold =
                cfg.at("confidence_threshold").get<double>();
            rec.decision.config_used.min_tumor_fraction =
                cfg.at("min_tumor_fraction").get<double>();
            records.push_back(std::move(rec));
        } catch (const json::exception& e) {
            throw format_error("decisions line " + std::to_string(line_no) + " in '" +
                               path.string() + "': " + e.what());
        }
    }
    return records;
}

} // namespace renal
