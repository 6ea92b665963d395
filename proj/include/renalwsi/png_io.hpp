#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "renalwsi/image.hpp"

namespace renal {

// PNG codec backed by libpng's simplified API. Any color type is accepted on
// read and converted to 8-bit RGB; writes always emit 8-bit RGB and are
// byte-deterministic for identical input.

ImageRGB read_png(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const ImageRGB& image);

std::vector<std::uint8_t> encode_png(const ImageRGB& image);

} // namespace renal
