#include "renalwsi/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "renalwsi/class_colors.hpp"
#include "renalwsi/errors.hpp"
#include "renalwsi/inference.hpp"
#include "renalwsi/png_io.hpp"
#include "renalwsi/rng.hpp"
#include "renalwsi/tiler.hpp"

namespace renal {

using nlohmann::json;

void SynthSpec::validate() const {
    if (width < 1 || height < 1) throw validation_error("synthetic slide too small");
    if (noise_amplitude < 0 || noise_amplitude > kMaxNoiseAmplitude) {
        throw validation_error("noise_amplitude must be in [0," +
                               std::to_string(kMaxNoiseAmplitude) +
                               "] to keep painted pixels below the whiteness cutoff");
    }
    for (const auto& sr : regions) {
        const auto& r = sr.region;
        if (!(0 <= r.x0 && r.x0 < r.x1 && r.x1 <= width && 0 <= r.y0 && r.y0 < r.y1 &&
              r.y1 <= height)) {
            throw validation_error("synthetic region out of slide bounds");
        }
    }
    for (std::size_t i = 0; i < regions.size(); ++i) {
        if (!is_tumor(regions[i].region.label)) continue;
        for (std::size_t j = i + 1; j < regions.size(); ++j) {
            if (!is_tumor(regions[j].region.label)) continue;
            const auto& a = regions[i].region;
            const auto& b = regions[j].region;
            const bool disjoint =
                a.x1 <= b.x0 || b.x1 <= a.x0 || a.y1 <= b.y0 || b.y1 <= a.y0;
            if (!disjoint) {
                throw validation_error("overlapping tumor regions in synthetic spec");
            }
        }
    }
}

namespace {

void paint_region(ImageRGB& image, const SynthRegion& sr, int amplitude,
                  std::uint64_t slide_seed) {
    Xoshiro256ss rng(mix_seed(slide_seed, sr.texture_seed));
    const auto& base = kClassBaseColor[label_index(sr.region.label)];
    for (int y = sr.region.y0; y < sr.region.y1; ++y) {
        std::uint8_t* p = image.px(sr.region.x0, y);
        for (int x = sr.region.x0; x < sr.region.x1; ++x, p += 3) {
            for (int ch = 0; ch < 3; ++ch) {
                const int v = base[ch] + static_cast<int>(rng.range(-amplitude, amplitude));
                p[ch] = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
            }
        }
    }
}

} // namespace

SynthSlide generate_slide(const SynthSpec& spec, const std::string& id,
                          double min_tumor_fraction) {
    spec.validate();

    SlideImage slide;
    slide.id = id;
    slide.image = ImageRGB(spec.width, spec.height, 255);
    slide.microns_per_pixel = kDefaultMicronsPerPixel;

    // Normal regions first, tumor on top; same order the ground-truth map uses.
    for (const auto& sr : spec.regions) {
        if (!is_tumor(sr.region.label)) {
            paint_region(slide.image, sr, spec.noise_amplitude, spec.seed);
        }
    }
    for (const auto& sr : spec.regions) {
        if (is_tumor(sr.region.label)) {
            paint_region(slide.image, sr, spec.noise_amplitude, spec.seed);
        }
    }

    std::vector<RegionAnnotation> annotations;
    annotations.reserve(spec.regions.size());
    for (const auto& sr : spec.regions) annotations.push_back(sr.region);
    GroundTruthMap truth =
        GroundTruthMap::from_annotations(spec.width, spec.height, annotations);

    const auto areas = truth.class_areas();
    std::int64_t tissue = 0;
    for (std::int64_t a : areas) tissue += a;

    ClassFractions fractions{};
    if (tissue > 0) {
        for (int c = 0; c < kNumClasses; ++c) {
            fractions[c] = static_cast<double>(areas[c]) / static_cast<double>(tissue);
        }
    }
    const ClassLabel gold = decide_label(fractions, {0.0, min_tumor_fraction});

    return {std::move(slide), std::move(truth), gold};
}

void DatasetSpec::validate() const {
    int total = 0;
    for (int n : counts) {
        if (n < 0) throw validation_error("dataset class counts must be >= 0");
        total += n;
    }
    if (total < 1) throw validation_error("dataset must contain at least one slide");
    if (min_width > max_width || min_height > max_height) {
        throw validation_error("dataset size range inverted");
    }
    if (margin < 0) throw validation_error("margin must be >= 0");
    const PatchSpec patch;
    // The tissue area must admit at least one grid patch clear of the margin.
    const int need = patch.stride() + patch.patch_size + 2 * margin;
    if (min_width < need || min_height < need) {
        throw validation_error("dataset slides must be at least " +
                               std::to_string(need) + "px per side");
    }
    if (noise_amplitude < 0 || noise_amplitude > kMaxNoiseAmplitude) {
        throw validation_error("noise_amplitude must be in [0," +
                               std::to_string(kMaxNoiseAmplitude) + "]");
    }
    if (!(min_tumor_fraction >= 0.0 && min_tumor_fraction <= 1.0)) {
        throw validation_error("min_tumor_fraction must be in [0,1]");
    }
}

namespace {

// Decision the oracle pipeline would reach at the default thresholds.
ClassLabel oracle_pipeline_label(const SynthSlide& synth, double min_tumor_fraction) {
    const TissueMask mask = compute_tissue_mask(synth.slide);
    const PatchSpec patch;
    const std::vector<Patch> patches = extract_patches(synth.slide, mask, patch);
    OracleClassifier oracle(synth.truth);
    const std::vector<PatchPrediction> pool = classify_patches(patches, oracle);
    return aggregate_pool(pool, {0.9, min_tumor_fraction}).label;
}

struct Placement {
    SynthSpec spec;
    ClassLabel wanted;
};

Placement place_slide(const DatasetSpec& ds, ClassLabel cls, int slide_index,
                      int attempt) {
    Xoshiro256ss rng(mix_seed(ds.seed, (static_cast<std::uint64_t>(slide_index) << 8) |
                                            static_cast<std::uint64_t>(attempt)));
    SynthSpec spec;
    spec.seed = mix_seed(ds.seed, static_cast<std::uint64_t>(slide_index));
    spec.noise_amplitude = ds.noise_amplitude;
    spec.width = static_cast<int>(rng.range(ds.min_width, ds.max_width));
    spec.height = static_cast<int>(rng.range(ds.min_height, ds.max_height));

    const int m = ds.margin;
    const RegionAnnotation tissue_box{ClassLabel::Normal, m, m, spec.width - m,
                                      spec.height - m};
    spec.regions.push_back({tissue_box, 0});

    if (is_tumor(cls)) {
        const PatchSpec patch;
        const std::vector<PatchCoord> grid =
            grid_coords(spec.width, spec.height, patch);
        // Anchor on a grid cell fully inside the tissue box so at least one
        // patch footprint is pure tumor.
        std::vector<PatchCoord> interior;
        for (const PatchCoord c : grid) {
            if (c.x >= tissue_box.x0 && c.y >= tissue_box.y0 &&
                c.x + patch.patch_size <= tissue_box.x1 &&
                c.y + patch.patch_size <= tissue_box.y1) {
                interior.push_back(c);
            }
        }
        if (interior.empty()) {
            throw validation_error("no tissue-interior grid cell; enlarge slides or "
                                   "shrink the margin");
        }
        const PatchCoord anchor = interior[rng.bounded(interior.size())];

        const double tissue_area = static_cast<double>(tissue_box.width()) *
                                   static_cast<double>(tissue_box.height());
        const double target = 0.20 + 0.25 * rng.next_double(); // tumor share of tissue
        int side = static_cast<int>(std::lround(std::sqrt(target * tissue_area)));
        side = std::clamp(side, patch.patch_size + 2,
                          std::min(tissue_box.width(), tissue_box.height()));

        auto clamp_pos = [](int want, int lo, int hi) {
            return std::clamp(want, lo, hi);
        };
        const int tx = clamp_pos(anchor.x - (side - patch.patch_size) / 2, tissue_box.x0,
                                 tissue_box.x1 - side);
        const int ty = clamp_pos(anchor.y - (side - patch.patch_size) / 2, tissue_box.y0,
                                 tissue_box.y1 - side);

        // Bounding union with the anchor footprint guarantees containment even
        // when clamping shifted the box.
        RegionAnnotation tumor;
        tumor.label = cls;
        tumor.x0 = std::min(tx, anchor.x);
        tumor.y0 = std::min(ty, anchor.y);
        tumor.x1 = std::max(tx + side, anchor.x + patch.patch_size);
        tumor.y1 = std::max(ty + side, anchor.y + patch.patch_size);
        spec.regions.push_back({tumor, 1});
    }
    return {std::move(spec), cls};
}

} // namespace

GeneratedDataset generate_dataset(const DatasetSpec& ds,
                                  const std::filesystem::path& out_dir) {
    ds.validate();
    std::filesystem::create_directories(out_dir);

    GeneratedDataset result;
    int slide_index = 0;
    for (int c = 0; c < kNumClasses; ++c) {
        const ClassLabel cls = label_from_index(c);
        for (int k = 0; k < ds.counts[c]; ++k, ++slide_index) {
            char idx_buf[8];
            std::snprintf(idx_buf, sizeof(idx_buf), "%03d", slide_index);
            const std::string id =
                "slide_" + std::string(idx_buf) + "_" + std::string(label_name(cls));

            SynthSpec spec;
            SynthSlide synth = [&] {
                for (int attempt = 0; attempt < 10; ++attempt) {
                    Placement placement = place_slide(ds, cls, slide_index, attempt);
                    SynthSlide candidate =
                        generate_slide(placement.spec, id, ds.min_tumor_fraction);
                    if (candidate.gold == cls &&
                        oracle_pipeline_label(candidate, ds.min_tumor_fraction) == cls) {
                        spec = std::move(placement.spec);
                        return candidate;
                    }
                }
                throw validation_error("could not place a self-consistent slide for " +
                                       std::string(label_name(cls)));
            }();

            write_png(out_dir / (id + ".png"), synth.slide.image);

            std::ofstream meta(out_dir / (id + ".meta.json"), std::ios::trunc);
            meta << json{{"microns_per_pixel", kDefaultMicronsPerPixel}}.dump(2) << "\n";

            // Region list stays in paint order (normal first) so the
            // ground-truth map rebuilt from the file matches the generated one.
            std::vector<RegionAnnotation> annotations;
            annotations.reserve(spec.regions.size());
            for (const auto& sr : spec.regions) annotations.push_back(sr.region);
            save_annotations(out_dir / (id + ".annotations.json"), annotations);

            SlideRecord rec;
            rec.id = id;
            rec.image_path = id + ".png";
            rec.annotations_path = id + ".annotations.json";
            rec.gold = synth.gold;
            rec.split = ds.split;
            result.records.push_back(rec);
        }
    }

    result.manifest_path = out_dir / "manifest.json";
    save_manifest(result.manifest_path, result.records);
    return result;
}

DatasetSpec parse_dataset_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open dataset spec '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw format_error("malformed JSON in '" + path.string() + "': " + e.what());
    }

    DatasetSpec ds;
    if (doc.contains("width")) {
        ds.min_width = ds.max_width = doc["width"].get<int>();
    }
    if (doc.contains("height")) {
        ds.min_height = ds.max_height = doc["height"].get<int>();
    }
    if (doc.contains("min_width")) ds.min_width = doc["min_width"].get<int>();
    if (doc.contains("max_width")) ds.max_width = doc["max_width"].get<int>();
    if (doc.contains("min_height")) ds.min_height = doc["min_height"].get<int>();
    if (doc.contains("max_height")) ds.max_height = doc["max_height"].get<int>();
    if (doc.contains("noise_amplitude")) {
        ds.noise_amplitude = doc["noise_amplitude"].get<int>();
    }
    if (doc.contains("seed")) ds.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("split")) ds.split = parse_split(doc["split"].get<std::string>());
    if (doc.contains("margin")) ds.margin = doc["margin"].get<int>();
    if (doc.contains("min_tumor_fraction")) {
        ds.min_tumor_fraction = doc["min_tumor_fraction"].get<double>();
    }
    if (doc.contains("counts")) {
        for (const auto& [key, value] : doc["counts"].items()) {
            ds.counts[label_index(parse_label(key))] = value.get<int>();
        }
    }
    ds.validate();
    return ds;
}

} // namespace renal
