#include "renalwsi/config.hpp"

#include <fstream>

#include <json.hpp>

#include "renalwsi/errors.hpp"

namespace renal {

using nlohmann::json;

namespace {

json to_json(const PipelineConfig& c) {
    json colors = json::object();
    for (int i = 0; i < kNumClasses; ++i) {
        colors[std::string(label_name(label_from_index(i)))] = c.palette.rgb[i];
    }
    return {
        {"patch",
         {{"patch_size", c.patch.patch_size},
          {"overlap_fraction", c.patch.overlap_fraction},
          {"min_tissue_fraction", c.patch.min_tissue_fraction}}},
        {"whiteness_cutoff", c.whiteness_cutoff},
        {"inference",
         {{"confidence_threshold", c.inference.confidence_threshold},
          {"min_tumor_fraction", c.inference.min_tumor_fraction}}},
        {"grid",
         {{"confidence_values", c.grid.confidence_values},
          {"fraction_values", c.grid.fraction_values}}},
        {"bootstrap",
         {{"iterations", c.bootstrap.iterations},
          {"seed", c.bootstrap.seed},
          {"lower_percentile", c.bootstrap.lower_percentile},
          {"upper_percentile", c.bootstrap.upper_percentile}}},
        {"palette",
         {{"alpha", c.palette.alpha},
          {"hide_normal", c.palette.hide_normal},
          {"colors", colors}}},
        {"classifier",
         {{"backend", c.classifier.backend},
          {"oracle_softness", c.classifier.oracle_softness},
          {"command", c.classifier.command},
          {"timeout_seconds", c.classifier.timeout_seconds},
          {"predictions_path", c.classifier.predictions_path}}},
        {"workers", c.workers}};
}

PipelineConfig from_json(const json& j) {
    PipelineConfig c;
    try {
        const auto& patch = j.at("patch");
        c.patch.patch_size = patch.at("patch_size").get<int>();
        c.patch.overlap_fraction = patch.at("overlap_fraction").get<double>();
        c.patch.min_tissue_fraction = patch.at("min_tissue_fraction").get<double>();

        c.whiteness_cutoff = j.at("whiteness_cutoff").get<int>();

        const auto& inference = j.at("inference");
        c.inference.confidence_threshold =
            inference.at("confidence_threshold").get<double>();
        c.inference.min_tumor_fraction = inference.at("min_tumor_fraction").get<double>();

        const auto& grid = j.at("grid");
        c.grid.confidence_values =
            grid.at("confidence_values").get<std::vector<double>>();
        c.grid.fraction_values = grid.at("fraction_values").get<std::vector<double>>();

        const auto& bootstrap = j.at("bootstrap");
        c.bootstrap.iterations = bootstrap.at("iterations").get<int>();
        c.bootstrap.seed = bootstrap.at("seed").get<std::uint64_t>();
        c.bootstrap.lower_percentile = bootstrap.at("lower_percentile").get<double>();
        c.bootstrap.upper_percentile = bootstrap.at("upper_percentile").get<double>();

        const auto& palette = j.at("palette");
        c.palette.alpha = palette.at("alpha").get<double>();
        c.palette.hide_normal = palette.at("hide_normal").get<bool>();
        const auto& colors = palette.at("colors");
        for (int i = 0; i < kNumClasses; ++i) {
            const auto rgb = colors.at(std::string(label_name(label_from_index(i))))
                                 .get<std::vector<int>>();
            if (rgb.size() != 3) throw config_error("palette colors must be [r,g,b]");
            for (int ch = 0; ch < 3; ++ch) {
                if (rgb[ch] < 0 || rgb[ch] > 255) {
                    throw config_error("palette channel out of [0,255]");
                }
                c.palette.rgb[i][ch] = static_cast<std::uint8_t>(rgb[ch]);
            }
        }

        const auto& classifier = j.at("classifier");
        c.classifier.backend = classifier.at("backend").get<std::string>();
        c.classifier.oracle_softness = classifier.at("oracle_softness").get<double>();
        c.classifier.command = classifier.at("command").get<std::string>();
        c.classifier.timeout_seconds = classifier.at("timeout_seconds").get<double>();
        c.classifier.predictions_path =
            classifier.at("predictions_path").get<std::string>();

        c.workers = j.at("workers").get<int>();
    } catch (const json::exception& e) {
        throw config_error(std::string("bad config structure: ") + e.what());
    }
    return c;
}

// Recursive overlay of `patch` onto `base`; every patched path must already
// exist with a compatible type, so typos surface immediately.
void merge_checked(json& base, const json& patch, const std::string& path) {
    for (const auto& [key, value] : patch.items()) {
        const std::string where = path.empty() ? key : path + "." + key;
        if (!base.contains(key)) {
            throw config_error("unknown config key '" + where + "'");
        }
        json& slot = base[key];
        if (slot.is_object()) {
            if (!value.is_object()) {
                throw config_error("config key '" + where + "' expects an object");
            }
            merge_checked(slot, value, where);
        } else {
            const bool both_numbers = slot.is_number() && value.is_number();
            if (!both_numbers && slot.type() != value.type()) {
                throw config_error("config key '" + where + "' has type " +
                                   std::string(slot.type_name()) + ", got " +
                                   std::string(value.type_name()));
            }
            slot = value;
        }
    }
}

} // namespace

void PipelineConfig::validate() const {
    try {
        patch.validate();
        inference.validate();
        grid.validate();
        bootstrap.validate();
        palette.validate();
    } catch (const validation_error& e) {
        throw config_error(e.what());
    }
    if (whiteness_cutoff < 0 || whiteness_cutoff > 255) {
        throw config_error("whiteness_cutoff must be in [0,255]");
    }
    if (workers < 1) throw config_error("workers must be >= 1");
    if (classifier.backend != "oracle" && classifier.backend != "heuristic" &&
        classifier.backend != "external" && classifier.backend != "predictions") {
        throw config_error("unknown classifier backend '" + classifier.backend +
                           "' (oracle|heuristic|external|predictions)");
    }
    if (!(classifier.oracle_softness >= 0.0 && classifier.oracle_softness < 1.0)) {
        throw config_error("oracle_softness must be in [0,1)");
    }
    if (!(classifier.timeout_seconds > 0)) {
        throw config_error("timeout_seconds must be positive");
    }
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config '" + path.string() + "'");
    json file;
    try {
        file = json::parse(in);
    } catch (const json::parse_error& e) {
        throw config_error("malformed config '" + path.string() + "': " + e.what());
    }
    json defaults = to_json(PipelineConfig{});
    merge_checked(defaults, file, "");
    PipelineConfig config = from_json(defaults);
    config.validate();
    return config;
}

PipelineConfig apply_overrides(const PipelineConfig& base,
                               const std::vector<std::string>& overrides) {
    json j = to_json(base);
    for (const std::string& entry : overrides) {
        const std::size_t eq = entry.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw config_error("--set expects key=value, got '" + entry + "'");
        }
        const std::string key = entry.substr(0, eq);
        const std::string raw = entry.substr(eq + 1);

        json value;
        try {
            value = json::parse(raw);
        } catch (const json::parse_error&) {
            value = raw; // unquoted strings pass through
        }

        json patch = value;
        // Build the nested object from the dotted path, innermost first.
        std::string remaining = key;
        std::vector<std::string> parts;
        std::size_t pos;
        while ((pos = remaining.find('.')) != std::string::npos) {
            parts.push_back(remaining.substr(0, pos));
            remaining.erase(0, pos + 1);
        }
        parts.push_back(remaining);
        for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
            patch = json{{*it, patch}};
        }
        merge_checked(j, patch, "");
    }
    PipelineConfig config = from_json(j);
    config.validate();
    return config;
}

std::string pipeline_config_to_json(const PipelineConfig& config) {
    return to_json(config).dump(2) + "\n";
}

} // namespace renal
