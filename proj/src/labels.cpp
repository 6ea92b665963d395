#include "renalwsi/labels.hpp"

#include "renalwsi/errors.hpp"

namespace renal {

namespace {
constexpr std::array<std::string_view, kNumClasses> kNames = {
    "normal", "oncocytoma", "chromophobe_rcc", "clear_cell_rcc", "papillary_rcc"};
}

std::string_view label_name(ClassLabel c) { return kNames[label_index(c)]; }

ClassLabel parse_label(std::string_view name) {
    for (int i = 0; i < kNumClasses; ++i) {
        if (kNames[i] == name) return label_from_index(i);
    }
    throw format_error("unknown class label: '" + std::string(name) + "'");
}

} // namespace renal
