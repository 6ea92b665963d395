#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "renalwsi/classifier.hpp"
#include "renalwsi/slide_model.hpp"

namespace renal {

struct SynthRegion {
    RegionAnnotation region;
    std::uint64_t texture_seed = 0;
};

// Deterministic synthetic slide: white background, one flat base color plus
// seeded noise per region. Tumor regions may overlap Normal regions (they
// paint on top) but never each other.
struct SynthSpec {
    int width = 512;
    int height = 512;
    std::vector<SynthRegion> regions;
    int noise_amplitude = 10; // per channel, in [0, kMaxNoiseAmplitude]
    std::uint64_t seed = 0;

    void validate() const;
};

struct SynthSlide {
    SlideImage slide;
    GroundTruthMap truth;
    ClassLabel gold = ClassLabel::Normal;
};

// The gold label applies the slide decision rule to exact pixel areas: the
// tumor class with the largest share of labeled (tissue) pixels wins when
// that share strictly exceeds min_tumor_fraction, otherwise Normal.
SynthSlide generate_slide(const SynthSpec& spec, const std::string& id,
                          double min_tumor_fraction = 0.05);

struct DatasetSpec {
    std::array<int, kNumClasses> counts{}; // slides per class, canonical order
    int min_width = 512, max_width = 512;
    int min_height = 512, max_height = 512;
    int noise_amplitude = 10;
    std::uint64_t seed = 0;
    Split split = Split::Test;
    int margin = 16; // white border around the tissue region
    double min_tumor_fraction = 0.05;

    void validate() const;
};

struct GeneratedDataset {
    std::filesystem::path manifest_path;
    std::vector<SlideRecord> records; // paths relative to the output dir
};

// Writes slides, sidecar metadata, annotations and a manifest. Every slide
// is verified to reproduce its gold label through the tissue-grid oracle
// pipeline at the default thresholds; placements that would not are redrawn.
GeneratedDataset generate_dataset(const DatasetSpec& spec,
                                  const std::filesystem::path& out_dir);

DatasetSpec parse_dataset_spec(const std::filesystem::path& path);

} // namespace renal
