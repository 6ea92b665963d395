#pragma once

#include <array>
#include <string>
#include <string_view>

namespace renal {

// Canonical class ordering. All probability vectors, fraction arrays and
// report rows are indexed by this order; it must never be reordered.
enum class ClassLabel : int {
    Normal = 0,
    Oncocytoma = 1,
    ChromophobeRCC = 2,
    ClearCellRCC = 3,
    PapillaryRCC = 4,
};

inline constexpr int kNumClasses = 5;

constexpr std::array<ClassLabel, kNumClasses> all_labels() {
    return {ClassLabel::Normal, ClassLabel::Oncocytoma, ClassLabel::ChromophobeRCC,
            ClassLabel::ClearCellRCC, ClassLabel::PapillaryRCC};
}

constexpr int label_index(ClassLabel c) { return static_cast<int>(c); }

constexpr ClassLabel label_from_index(int i) { return static_cast<ClassLabel>(i); }

// Normal is the only non-tumor class.
constexpr bool is_tumor(ClassLabel c) { return c != ClassLabel::Normal; }

// Snake-case names used in every JSON interface.
std::string_view label_name(ClassLabel c);

// Throws format_error on an unknown name.
ClassLabel parse_label(std::string_view name);

} // namespace renal
