#pragma once

#include <array>
#include <cstdint>

#include "renalwsi/labels.hpp"

namespace renal {

// Texture base colors shared by the synthetic slide generator and the
// color-heuristic backend. Every color keeps min(R,G,B) <= 170 so that a
// painted pixel stays below the default whiteness cutoff (220) even after
// the maximum allowed +-49 texture noise.
inline constexpr std::array<std::array<std::uint8_t, 3>, kNumClasses> kClassBaseColor = {{
    {196, 168, 208}, // normal          - pale violet
    {150, 104, 82},  // oncocytoma      - brown
    {124, 144, 192}, // chromophobe_rcc - slate blue
    {228, 140, 146}, // clear_cell_rcc  - pink
    {124, 172, 124}, // papillary_rcc   - green
}};

inline constexpr int kMaxNoiseAmplitude = 49;

} // namespace renal
