#include "renalwsi/tiff_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "renalwsi/errors.hpp"

namespace renal {

namespace {

constexpr std::uint16_t kTagImageWidth = 256;
constexpr std::uint16_t kTagImageLength = 257;
constexpr std::uint16_t kTagBitsPerSample = 258;
constexpr std::uint16_t kTagCompression = 259;
constexpr std::uint16_t kTagPhotometric = 262;
constexpr std::uint16_t kTagStripOffsets = 273;
constexpr std::uint16_t kTagSamplesPerPixel = 277;
constexpr std::uint16_t kTagRowsPerStrip = 278;
constexpr std::uint16_t kTagStripByteCounts = 279;
constexpr std::uint16_t kTagPlanarConfig = 284;

constexpr std::uint16_t kTypeShort = 3;
constexpr std::uint16_t kTypeLong = 4;

class Reader {
public:
    Reader(std::vector<std::uint8_t> data, std::string name)
        : data_(std::move(data)), name_(std::move(name)) {}

    std::uint16_t u16(std::size_t off) const {
        check(off, 2);
        return little_ ? static_cast<std::uint16_t>(data_[off] | data_[off + 1] << 8)
                       : static_cast<std::uint16_t>(data_[off] << 8 | data_[off + 1]);
    }

    std::uint32_t u32(std::size_t off) const {
        check(off, 4);
        if (little_) {
            return data_[off] | data_[off + 1] << 8 | data_[off + 2] << 16 |
                   static_cast<std::uint32_t>(data_[off + 3]) << 24;
        }
        return static_cast<std::uint32_t>(data_[off]) << 24 | data_[off + 1] << 16 |
               data_[off + 2] << 8 | data_[off + 3];
    }

    void set_little(bool v) { little_ = v; }
    const std::uint8_t* at(std::size_t off, std::size_t len) const {
        check(off, len);
        return data_.data() + off;
    }
    std::size_t size() const { return data_.size(); }

private:
    void check(std::size_t off, std::size_t len) const {
        if (off + len > data_.size()) {
            throw format_error("truncated TIFF file '" + name_ + "'");
        }
    }

    std::vector<std::uint8_t> data_;
    std::string name_;
    bool little_ = true;
};

struct IfdEntry {
    std::uint16_t type = 0;
    std::uint32_t count = 0;
    std::uint32_t value_or_offset = 0; // raw field, interpretation depends on type
};

// SHORT/LONG scalar or array element access.
std::uint32_t entry_value(const Reader& r, const IfdEntry& e, std::size_t entry_off,
                          std::uint32_t index) {
    const std::size_t elem_size = (e.type == kTypeShort) ? 2 : 4;
    const std::size_t total = elem_size * e.count;
    // Values <= 4 bytes are stored inline in the offset field.
    std::size_t base = (total <= 4) ? entry_off + 8 : e.value_or_offset;
    std::size_t off = base + elem_size * index;
    return (e.type == kTypeShort) ? r.u16(off) : r.u32(off);
}

} // namespace

ImageRGB read_tiff(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open TIFF '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    Reader r(std::move(bytes), path.string());

    if (r.size() < 8) throw format_error("truncated TIFF file '" + path.string() + "'");
    const std::uint8_t* hdr = r.at(0, 4);
    if (hdr[0] == 'I' && hdr[1] == 'I') {
        r.set_little(true);
    } else if (hdr[0] == 'M' && hdr[1] == 'M') {
        r.set_little(false);
    } else {
        throw format_error("not a TIFF file: '" + path.string() + "'");
    }
    if (r.u16(2) != 42) throw format_error("bad TIFF magic in '" + path.string() + "'");

    const std::uint32_t ifd_off = r.u32(4);
    const std::uint16_t n_entries = r.u16(ifd_off);

    std::uint32_t width = 0, height = 0, rows_per_strip = 0xFFFFFFFFu;
    std::uint32_t compression = 1, photometric = 2, samples = 1, planar = 1;
    IfdEntry bits{}, strip_offsets{}, strip_counts{};
    std::size_t bits_off = 0, strip_offsets_off = 0, strip_counts_off = 0;

    for (std::uint16_t i = 0; i < n_entries; ++i) {
        const std::size_t off = ifd_off + 2 + 12 * static_cast<std::size_t>(i);
        const std::uint16_t tag = r.u16(off);
        IfdEntry e{r.u16(off + 2), r.u32(off + 4), r.u32(off + 8)};
        if (e.type != kTypeShort && e.type != kTypeLong) continue;
        switch (tag) {
        case kTagImageWidth: width = entry_value(r, e, off, 0); break;
        case kTagImageLength: height = entry_value(r, e, off, 0); break;
        case kTagBitsPerSample: bits = e; bits_off = off; break;
        case kTagCompression: compression = entry_value(r, e, off, 0); break;
        case kTagPhotometric: photometric = entry_value(r, e, off, 0); break;
        case kTagStripOffsets: strip_offsets = e; strip_offsets_off = off; break;
        case kTagSamplesPerPixel: samples = entry_value(r, e, off, 0); break;
        case kTagRowsPerStrip: rows_per_strip = entry_value(r, e, off, 0); break;
        case kTagStripByteCounts: strip_counts = e; strip_counts_off = off; break;
        case kTagPlanarConfig: planar = entry_value(r, e, off, 0); break;
        default: break;
        }
    }

    if (width == 0 || height == 0) {
        throw format_error("TIFF missing dimensions: '" + path.string() + "'");
    }
    if (compression != 1) {
        throw format_error("unsupported TIFF compression (only uncompressed baseline)");
    }
    if (photometric != 2 || samples != 3 || planar != 1) {
        throw format_error("unsupported TIFF layout (need chunky 3-sample RGB)");
    }
    for (std::uint32_t i = 0; i < bits.count; ++i) {
        if (entry_value(r, bits, bits_off, i) != 8) {
            throw format_error("unsupported TIFF bit depth (need 8 bits per sample)");
        }
    }
    if (strip_offsets.count == 0) {
        throw format_error("TIFF missing strip offsets: '" + path.string() + "'");
    }

    ImageRGB out(static_cast<int>(width), static_cast<int>(height));
    const std::size_t row_bytes = static_cast<std::size_t>(width) * 3;
    std::size_t written = 0;
    std::uint32_t row = 0;
    for (std::uint32_t s = 0; s < strip_offsets.count; ++s) {
        const std::uint32_t src = entry_value(r, strip_offsets, strip_offsets_off, s);
        const std::uint32_t count = entry_value(r, strip_counts, strip_counts_off, s);
        const std::uint32_t rows =
            std::min<std::uint32_t>(rows_per_strip, height - row);
        if (count != rows * row_bytes) {
            throw format_error("TIFF strip size mismatch in '" + path.string() + "'");
        }
        std::memcpy(out.pixels.data() + written, r.at(src, count), count);
        written += count;
        row += rows;
    }
    if (written != out.pixels.size()) {
        throw format_error("TIFF pixel data incomplete in '" + path.string() + "'");
    }
    return out;
}

namespace {

void put16(std::vector<std::uint8_t>& b, std::uint16_t v) {
    b.push_back(v & 0xFF);
    b.push_back(v >> 8);
}
void put32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    b.push_back(v & 0xFF);
    b.push_back((v >> 8) & 0xFF);
    b.push_back((v >> 16) & 0xFF);
    b.push_back(v >> 24);
}
void put_entry(std::vector<std::uint8_t>& b, std::uint16_t tag, std::uint16_t type,
               std::uint32_t count, std::uint32_t value) {
    put16(b, tag);
    put16(b, type);
    put32(b, count);
    put32(b, value);
}

} // namespace

void write_tiff(const std::filesystem::path& path, const ImageRGB& image) {
    if (image.empty()) throw validation_error("refusing to write empty image");

    const std::uint32_t w = static_cast<std::uint32_t>(image.width);
    const std::uint32_t h = static_cast<std::uint32_t>(image.height);
    const std::uint32_t data_size = w * h * 3;

    std::vector<std::uint8_t> b;
    b.reserve(8 + 2 + 10 * 12 + 4 + 6 + data_size);

    // Header, IFD immediately after.
    b.push_back('I');
    b.push_back('I');
    put16(b, 42);
    put32(b, 8);

    const std::uint16_t n_entries = 10;
    const std::uint32_t ifd_off = 8;
    const std::uint32_t after_ifd = ifd_off + 2 + n_entries * 12 + 4;
    const std::uint32_t bits_off = after_ifd;  // 3 SHORTs (8,8,8)
    const std::uint32_t data_off = bits_off + 6;

    put16(b, n_entries);
    put_entry(b, kTagImageWidth, kTypeLong, 1, w);
    put_entry(b, kTagImageLength, kTypeLong, 1, h);
    put_entry(b, kTagBitsPerSample, kTypeShort, 3, bits_off);
    put_entry(b, kTagCompression, kTypeShort, 1, 1);
    put_entry(b, kTagPhotometric, kTypeShort, 1, 2);
    put_entry(b, kTagStripOffsets, kTypeLong, 1, data_off);
    put_entry(b, kTagSamplesPerPixel, kTypeShort, 1, 3);
    put_entry(b, kTagRowsPerStrip, kTypeLong, 1, h);
    put_entry(b, kTagStripByteCounts, kTypeLong, 1, data_size);
    put_entry(b, kTagPlanarConfig, kTypeShort, 1, 1);
    put32(b, 0); // no next IFD

    put16(b, 8);
    put16(b, 8);
    put16(b, 8);

    b.insert(b.end(), image.pixels.begin(), image.pixels.end());

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot create TIFF '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(b.data()),
              static_cast<std::streamsize>(b.size()));
    if (!out) throw io_error("failed writing TIFF '" + path.string() + "'");
}

} // namespace renal
