#pragma once

#include <cstdint>
#include <vector>

namespace renal {

// Row-major 8-bit RGB raster. Pixel buffer length is always width*height*3.
struct ImageRGB {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    ImageRGB() = default;
    ImageRGB(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

    bool empty() const { return pixels.empty(); }

    std::uint8_t* px(int x, int y) {
        return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }
    const std::uint8_t* px(int x, int y) const {
        return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }

    bool operator==(const ImageRGB&) const = default;
};

} // namespace renal
