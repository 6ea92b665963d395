#include "renalwsi/slide_model.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "renalwsi/errors.hpp"
#include "renalwsi/png_io.hpp"
#include "renalwsi/tiff_io.hpp"

namespace renal {

using nlohmann::json;

namespace {

std::string lower_ext(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

json parse_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw format_error("malformed JSON in '" + path.string() + "': " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot create '" + path.string() + "'");
    out << text;
    if (!out) throw io_error("failed writing '" + path.string() + "'");
}

} // namespace

std::size_t TissueMask::tissue_count() const {
    return static_cast<std::size_t>(std::count(tissue.begin(), tissue.end(), 1));
}

std::string_view split_name(Split s) {
    switch (s) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
    }
    return "test";
}

Split parse_split(std::string_view name) {
    if (name == "train") return Split::Train;
    if (name == "dev") return Split::Dev;
    if (name == "test") return Split::Test;
    throw format_error("unknown split tag: '" + std::string(name) + "'");
}

SlideImage load_slide(const std::filesystem::path& path) {
    SlideImage slide;
    slide.id = path.stem().string();

    const std::string ext = lower_ext(path);
    if (ext == ".png") {
        slide.image = read_png(path);
    } else if (ext == ".tif" || ext == ".tiff") {
        slide.image = read_tiff(path);
    } else {
        throw format_error("unsupported slide format '" + ext + "' (need PNG or TIFF)");
    }
    if (slide.width() < 1 || slide.height() < 1) {
        throw format_error("slide '" + path.string() + "' has empty dimensions");
    }

    // Sidecar lookup: `<stem>.meta.json` is the canonical name, the
    // appended form `<file>.meta.json` is accepted too.
    std::filesystem::path sidecar = path;
    sidecar.replace_extension(".meta.json");
    if (!std::filesystem::exists(sidecar)) {
        sidecar = path;
        sidecar += ".meta.json";
    }

    if (std::filesystem::exists(sidecar)) {
        const json meta = parse_json_file(sidecar);
        if (!meta.contains("microns_per_pixel") ||
            !meta["microns_per_pixel"].is_number()) {
            throw format_error("sidecar '" + sidecar.string() +
                               "' lacks numeric microns_per_pixel");
        }
        slide.microns_per_pixel = meta["microns_per_pixel"].get<double>();
        if (!(slide.microns_per_pixel > 0)) {
            throw validation_error("microns_per_pixel must be positive in '" +
                                   sidecar.string() + "'");
        }
    } else {
        slide.microns_per_pixel = kDefaultMicronsPerPixel;
        slide.mpp_defaulted = true;
    }
    return slide;
}

TissueMask compute_tissue_mask(const SlideImage& slide, int whiteness_cutoff) {
    if (whiteness_cutoff < 0 || whiteness_cutoff > 255) {
        throw validation_error("whiteness_cutoff must be in [0,255]");
    }
    TissueMask mask;
    mask.width = slide.width();
    mask.height = slide.height();
    mask.tissue.resize(static_cast<std::size_t>(mask.width) * mask.height);

    const std::uint8_t* p = slide.image.pixels.data();
    for (std::size_t i = 0; i < mask.tissue.size(); ++i, p += 3) {
        const int lo = std::min({p[0], p[1], p[2]});
        mask.tissue[i] = lo >= whiteness_cutoff ? 0 : 1;
    }
    return mask;
}

std::vector<RegionAnnotation> parse_annotations(const std::string& text,
                                                int slide_width, int slide_height,
                                                const std::string& source_name) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw format_error("malformed JSON in '" + source_name + "': " + e.what());
    }
    if (!doc.is_array()) {
        throw format_error("annotation file '" + source_name + "' must be a JSON array");
    }

    std::vector<RegionAnnotation> out;
    out.reserve(doc.size());
    int index = 0;
    for (const auto& item : doc) {
        if (!item.is_object() || !item.contains("label") || !item.contains("bbox")) {
            throw format_error("annotation #" + std::to_string(index) + " in '" +
                               source_name + "' needs label and bbox");
        }
        RegionAnnotation region;
        region.label = parse_label(item["label"].get<std::string>());
        const auto& bbox = item["bbox"];
        if (!bbox.is_array() || bbox.size() != 4) {
            throw format_error("annotation #" + std::to_string(index) + " in '" +
                               source_name + "' bbox must be [x0,y0,x1,y1]");
        }
        region.x0 = bbox[0].get<int>();
        region.y0 = bbox[1].get<int>();
        region.x1 = bbox[2].get<int>();
        region.y1 = bbox[3].get<int>();

        if (!(0 <= region.x0 && region.x0 < region.x1 && region.x1 <= slide_width &&
              0 <= region.y0 && region.y0 < region.y1 && region.y1 <= slide_height)) {
            throw validation_error(
                "annotation #" + std::to_string(index) + " (" +
                std::string(label_name(region.label)) + ", bbox [" +
                std::to_string(region.x0) + "," + std::to_string(region.y0) + "," +
                std::to_string(region.x1) + "," + std::to_string(region.y1) +
                "]) out of bounds for " + std::to_string(slide_width) + "x" +
                std::to_string(slide_height) + " slide in '" + source_name + "'");
        }
        out.push_back(region);
        ++index;
    }
    return out;
}

std::vector<RegionAnnotation> load_annotations(const std::filesystem::path& path,
                                               const SlideImage& slide) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path.string() + "'");
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return parse_annotations(text, slide.width(), slide.height(), path.string());
}

void save_annotations(const std::filesystem::path& path,
                      const std::vector<RegionAnnotation>& annotations) {
    json doc = json::array();
    for (const auto& region : annotations) {
        doc.push_back({{"label", label_name(region.label)},
                       {"bbox", {region.x0, region.y0, region.x1, region.y1}}});
    }
    write_text_file(path, doc.dump(2) + "\n");
}

std::vector<SlideRecord> load_manifest(const std::filesystem::path& path) {
    const json doc = parse_json_file(path);
    if (!doc.is_array()) {
        throw format_error("manifest '" + path.string() + "' must be a JSON array");
    }
    const std::filesystem::path base = path.parent_path();

    std::vector<SlideRecord> records;
    std::unordered_set<std::string> seen;
    for (const auto& item : doc) {
        SlideRecord rec;
        rec.id = item.at("id").get<std::string>();
        if (!seen.insert(rec.id).second) {
            throw validation_error("duplicate slide id '" + rec.id + "' in manifest");
        }
        rec.image_path = (base / item.at("image").get<std::string>()).string();
        if (item.contains("annotations") && !item["annotations"].is_null() &&
            !item["annotations"].get<std::string>().empty()) {
            rec.annotations_path =
                (base / item["annotations"].get<std::string>()).string();
        }
        rec.gold = parse_label(item.at("gold_label").get<std::string>());
        rec.split = parse_split(item.at("split").get<std::string>());
        records.push_back(std::move(rec));
    }
    return records;
}

void save_manifest(const std::filesystem::path& path,
                   const std::vector<SlideRecord>& records) {
    json doc = json::array();
    for (const auto& rec : records) {
        doc.push_back({{"id", rec.id},
                       {"image", rec.image_path},
                       {"annotations", rec.annotations_path},
                       {"gold_label", label_name(rec.gold)},
                       {"split", split_name(rec.split)}});
    }
    write_text_file(path, doc.dump(2) + "\n");
}

} // namespace renal
