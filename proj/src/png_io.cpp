#include "renalwsi/png_io.hpp"

#include <png.h>

#include <cstring>

#include "renalwsi/errors.hpp"

namespace renal {

ImageRGB read_png(const std::filesystem::path& path) {
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;

    if (!png_image_begin_read_from_file(&png, path.string().c_str())) {
        throw io_error("failed to open PNG '" + path.string() + "': " + png.message);
    }
    png.format = PNG_FORMAT_RGB;

    ImageRGB out(static_cast<int>(png.width), static_cast<int>(png.height));
    if (!png_image_finish_read(&png, nullptr, out.pixels.data(), 0, nullptr)) {
        std::string msg = png.message;
        png_image_free(&png);
        throw format_error("failed to decode PNG '" + path.string() + "': " + msg);
    }
    return out;
}

void write_png(const std::filesystem::path& path, const ImageRGB& image) {
    if (image.empty()) throw validation_error("refusing to write empty image");

    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width);
    png.height = static_cast<png_uint_32>(image.height);
    png.format = PNG_FORMAT_RGB;

    if (!png_image_write_to_file(&png, path.string().c_str(), 0, image.pixels.data(), 0,
                                 nullptr)) {
        throw io_error("failed to write PNG '" + path.string() + "': " + png.message);
    }
}

std::vector<std::uint8_t> encode_png(const ImageRGB& image) {
    if (image.empty()) throw validation_error("refusing to encode empty image");

    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width);
    png.height = static_cast<png_uint_32>(image.height);
    png.format = PNG_FORMAT_RGB;

    // First pass sizes the buffer, second pass fills it.
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.pixels.data(), 0,
                                   nullptr)) {
        throw io_error(std::string("failed to size PNG buffer: ") + png.message);
    }
    std::vector<std::uint8_t> buf(size);
    if (!png_image_write_to_memory(&png, buf.data(), &size, 0, image.pixels.data(), 0,
                                   nullptr)) {
        throw io_error(std::string("failed to encode PNG: ") + png.message);
    }
    buf.resize(size);
    return buf;
}

} // namespace renal
