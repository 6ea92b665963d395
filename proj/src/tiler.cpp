#include "renalwsi/tiler.hpp"

#include <cmath>
#include <cstring>
#include <ostream>

#include <json.hpp>

#include "renalwsi/errors.hpp"
#include "renalwsi/png_io.hpp"

namespace renal {

void PatchSpec::validate() const {
    if (patch_size < 1) throw validation_error("patch_size must be >= 1");
    if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
        throw validation_error("overlap_fraction must be in [0,1)");
    }
    if (stride() < 1) {
        throw validation_error("overlap_fraction too large: stride would be < 1");
    }
    if (!(min_tissue_fraction >= 0.0 && min_tissue_fraction <= 1.0)) {
        throw validation_error("min_tissue_fraction must be in [0,1]");
    }
}

namespace {

std::vector<int> axis_coords(int extent, int patch, int stride) {
    std::vector<int> xs;
    for (int x = 0; x + patch <= extent; x += stride) xs.push_back(x);
    // Clamp a final patch to the edge so no column/row stays unseen.
    if (xs.back() + patch < extent) xs.push_back(extent - patch);
    return xs;
}

} // namespace

std::vector<PatchCoord> grid_coords(int width, int height, const PatchSpec& spec) {
    spec.validate();
    if (width < spec.patch_size || height < spec.patch_size) {
        throw geometry_error("image " + std::to_string(width) + "x" +
                             std::to_string(height) + " smaller than patch size " +
                             std::to_string(spec.patch_size));
    }
    const std::vector<int> xs = axis_coords(width, spec.patch_size, spec.stride());
    const std::vector<int> ys = axis_coords(height, spec.patch_size, spec.stride());

    std::vector<PatchCoord> coords;
    coords.reserve(xs.size() * ys.size());
    for (int y : ys) {
        for (int x : xs) coords.push_back({x, y});
    }
    return coords;
}

double tissue_fraction_at(const TissueMask& mask, PatchCoord coord, int patch_size) {
    std::size_t count = 0;
    for (int dy = 0; dy < patch_size; ++dy) {
        const std::uint8_t* row =
            mask.tissue.data() + static_cast<std::size_t>(coord.y + dy) * mask.width +
            coord.x;
        for (int dx = 0; dx < patch_size; ++dx) count += row[dx];
    }
    return static_cast<double>(count) /
           (static_cast<double>(patch_size) * patch_size);
}

ImageRGB crop(const ImageRGB& image, PatchCoord coord, int size) {
    ImageRGB out(size, size);
    for (int dy = 0; dy < size; ++dy) {
        std::memcpy(out.px(0, dy), image.px(coord.x, coord.y + dy),
                    static_cast<std::size_t>(size) * 3);
    }
    return out;
}

std::vector<Patch> extract_patches(const SlideImage& slide, const TissueMask& mask,
                                   const PatchSpec& spec) {
    if (mask.width != slide.width() || mask.height != slide.height()) {
        throw validation_error("tissue mask dimensions do not match slide '" +
                               slide.id + "'");
    }
    std::vector<Patch> patches;
    for (const PatchCoord coord : grid_coords(slide.width(), slide.height(), spec)) {
        const double tf = tissue_fraction_at(mask, coord, spec.patch_size);
        if (tf < spec.min_tissue_fraction) continue;
        patches.push_back(
            {coord, spec.patch_size, crop(slide.image, coord, spec.patch_size), tf});
    }
    return patches;
}

RoiPatchSet extract_roi_patches(const SlideImage& slide, const TissueMask& mask,
                                std::span<const RegionAnnotation> annotations,
                                const PatchSpec& spec) {
    spec.validate();
    if (mask.width != slide.width() || mask.height != slide.height()) {
        throw validation_error("tissue mask dimensions do not match slide '" +
                               slide.id + "'");
    }
    RoiPatchSet out;
    for (const RegionAnnotation& region : annotations) {
        if (region.width() < spec.patch_size || region.height() < spec.patch_size) {
            ++out.skipped_regions;
            continue;
        }
        const std::vector<int> xs =
            axis_coords(region.width(), spec.patch_size, spec.stride());
        const std::vector<int> ys =
            axis_coords(region.height(), spec.patch_size, spec.stride());
        for (int ly : ys) {
            for (int lx : xs) {
                const PatchCoord coord{region.x0 + lx, region.y0 + ly};
                const double tf = tissue_fraction_at(mask, coord, spec.patch_size);
                out.patches.push_back(
                    {{coord, spec.patch_size, crop(slide.image, coord, spec.patch_size),
                      tf},
                     region.label});
            }
        }
    }
    return out;
}

void export_patches(const std::filesystem::path& out_dir, const std::string& slide_id,
                    std::span<const Patch> patches, std::ostream& index,
                    std::optional<ClassLabel> label) {
    std::filesystem::create_directories(out_dir);
    for (const Patch& patch : patches) {
        const std::string name = slide_id + "_" + std::to_string(patch.coord.x) + "_" +
                                 std::to_string(patch.coord.y) + ".png";
        write_png(out_dir / name, patch.pixels);

        nlohmann::json line = {{"slide_id", slide_id},
                               {"x", patch.coord.x},
                               {"y", patch.coord.y},
                               {"tissue_fraction", patch.tissue_fraction}};
        if (label) line["label"] = label_name(*label);
        index << line.dump() << "\n";
    }
}

} // namespace renal
