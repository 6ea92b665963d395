#pragma once

#include <compare>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "renalwsi/slide_model.hpp"

namespace renal {

// Sliding-window geometry. stride = floor(patch_size * (1 - overlap));
// the fractional default overlap rounds the stride down, giving slightly
// more overlap rather than less.
struct PatchSpec {
    int patch_size = 224;
    double overlap_fraction = 1.0 / 3.0;
    double min_tissue_fraction = 0.5;

    int stride() const {
        return static_cast<int>(patch_size * (1.0 - overlap_fraction));
    }
    void validate() const;
};

// Top-left corner of a patch footprint, slide coordinates.
struct PatchCoord {
    int x = 0;
    int y = 0;
    auto operator<=>(const PatchCoord&) const = default;
};

struct Patch {
    PatchCoord coord;
    int size = 0;
    ImageRGB pixels;
    double tissue_fraction = 0.0;
};

// Row-major coordinates (y outer, x inner) covering the full extent: regular
// steps of stride(), plus one clamped tail coordinate per axis when the last
// regular step leaves a margin uncovered. Throws geometry_error when either
// dimension is smaller than patch_size.
std::vector<PatchCoord> grid_coords(int width, int height, const PatchSpec& spec);

double tissue_fraction_at(const TissueMask& mask, PatchCoord coord, int patch_size);

ImageRGB crop(const ImageRGB& image, PatchCoord coord, int size);

// Grid patches whose tissue_fraction >= spec.min_tissue_fraction, in
// grid_coords order.
std::vector<Patch> extract_patches(const SlideImage& slide, const TissueMask& mask,
                                   const PatchSpec& spec);

struct LabeledPatch {
    Patch patch;
    ClassLabel label = ClassLabel::Normal;
};

struct RoiPatchSet {
    std::vector<LabeledPatch> patches;
    int skipped_regions = 0; // regions smaller than patch_size in either dimension
};

// Runs the grid inside each bbox independently (bbox-local origin, global
// output coordinates); every patch inherits its region's label. No tissue
// admission filter is applied; the mask only feeds tissue_fraction.
RoiPatchSet extract_roi_patches(const SlideImage& slide, const TissueMask& mask,
                                std::span<const RegionAnnotation> annotations,
                                const PatchSpec& spec);

// Patch export: `<slide_id>_<x>_<y>.png` files plus a JSONL index with one
// {"slide_id","x","y","tissue_fraction"[,"label"]} line per patch.
void export_patches(const std::filesystem::path& out_dir, const std::string& slide_id,
                    std::span<const Patch> patches, std::ostream& index,
                    std::optional<ClassLabel> label = std::nullopt);

void export_labeled_patches(const std::filesystem::path& out_dir,
                            const std::string& slide_id,
                            std::span<const LabeledPatch> patches, std::ostream& index);

} // namespace renal
