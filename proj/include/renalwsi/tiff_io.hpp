#pragma once

#include <filesystem>

#include "renalwsi/image.hpp"

namespace renal {

// Minimal baseline TIFF codec: uncompressed, chunky, 8-bit RGB, either byte
// order on read; writes are little-endian single-strip. Anything fancier
// (compression, tiles, planar layout, other depths) is rejected with
// format_error.

ImageRGB read_tiff(const std::filesystem::path& path);

void write_tiff(const std::filesystem::path& path, const ImageRGB& image);

} // namespace renal
