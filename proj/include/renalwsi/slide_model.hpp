#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "renalwsi/image.hpp"
#include "renalwsi/labels.hpp"

namespace renal {

inline constexpr double kDefaultMicronsPerPixel = 0.50;
inline constexpr int kDefaultWhitenessCutoff = 220;

// The unit of diagnosis. Immutable after loading; safe to share across
// workers.
struct SlideImage {
    std::string id;
    ImageRGB image;
    double microns_per_pixel = kDefaultMicronsPerPixel;
    // Set when no sidecar metadata was found and the default spacing applied.
    bool mpp_defaulted = false;

    int width() const { return image.width; }
    int height() const { return image.height; }
};

// Half-open bounding box [x0,x1) x [y0,y1) in slide pixel coordinates.
struct RegionAnnotation {
    ClassLabel label = ClassLabel::Normal;
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    bool operator==(const RegionAnnotation&) const = default;
};

// Per-pixel tissue/background map, dimensions equal to the source slide.
struct TissueMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> tissue; // 1 = tissue, 0 = background

    bool at(int x, int y) const {
        return tissue[static_cast<std::size_t>(y) * width + x] != 0;
    }
    std::size_t tissue_count() const;
};

enum class Split { Train, Dev, Test };

std::string_view split_name(Split s);
Split parse_split(std::string_view name);

// One manifest row. Paths are resolved relative to the manifest file.
struct SlideRecord {
    std::string id;
    std::string image_path;
    std::string annotations_path; // empty when the slide has no ROI file
    ClassLabel gold = ClassLabel::Normal;
    Split split = Split::Test;
};

// Decodes a PNG or baseline TIFF raster and picks up microns-per-pixel from
// the optional `<stem>.meta.json` sidecar (`<path>.meta.json` also accepted).
SlideImage load_slide(const std::filesystem::path& path);

// A pixel is background iff min(R,G,B) >= whiteness_cutoff.
TissueMask compute_tissue_mask(const SlideImage& slide,
                               int whiteness_cutoff = kDefaultWhitenessCutoff);

// Annotation JSON: array of {"label": <name>, "bbox": [x0,y0,x1,y1]}.
std::vector<RegionAnnotation> load_annotations(const std::filesystem::path& path,
                                               const SlideImage& slide);
std::vector<RegionAnnotation> parse_annotations(const std::string& text,
                                                int slide_width, int slide_height,
                                                const std::string& source_name);
void save_annotations(const std::filesystem::path& path,
                      const std::vector<RegionAnnotation>& annotations);

// Dataset manifest: JSON array of {"id","image","annotations","gold_label","split"}.
std::vector<SlideRecord> load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path,
                   const std::vector<SlideRecord>& records);

} // namespace renal
