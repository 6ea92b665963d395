#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "renalwsi/classifier.hpp"
#include "renalwsi/slide_model.hpp"

namespace renal {

struct Palette {
    // Overlay colors per class, canonical order; distinct from the synthetic
    // texture base colors on purpose.
    std::array<std::array<std::uint8_t, 3>, kNumClasses> rgb;
    double alpha = 0.4;
    bool hide_normal = false;

    static Palette defaults();
    void validate() const;
};

// Downsampled slide (box averaging) alpha-blended with per-pixel class
// colors. A source pixel belongs to the covering retained prediction with
// the highest confidence (ties resolve to canonical class order); an output
// pixel is colored iff any source pixel in its block is covered, taking that
// block's winning class. Uncovered pixels pass through unblended.
ImageRGB render_overlay(const SlideImage& slide,
                        std::span<const PatchPrediction> predictions, int patch_size,
                        const Palette& palette, int downsample = 1);

// Deterministic swatch strip with upper-case class names.
ImageRGB render_legend(const Palette& palette);

} // namespace renal
