#include "renalwsi/base64.hpp"

#include <array>

#include "renalwsi/errors.hpp"

namespace renal {

namespace {
constexpr char kAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::array<int, 256> decode_table() {
    std::array<int, 256> t{};
    t.fill(-1);
    for (int i = 0; i < 64; ++i) t[static_cast<unsigned char>(kAlphabet[i])] = i;
    return t;
}
} // namespace

std::string base64_encode(const std::vector<std::uint8_t>& data) {
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= data.size(); i += 3) {
        const std::uint32_t v = data[i] << 16 | data[i + 1] << 8 | data[i + 2];
        out.push_back(kAlphabet[v >> 18]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.push_back(kAlphabet[(v >> 6) & 63]);
        out.push_back(kAlphabet[v & 63]);
    }
    const std::size_t rem = data.size() - i;
    if (rem == 1) {
        const std::uint32_t v = data[i] << 16;
        out.push_back(kAlphabet[v >> 18]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.append("==");
    } else if (rem == 2) {
        const std::uint32_t v = data[i] << 16 | data[i + 1] << 8;
        out.push_back(kAlphabet[v >> 18]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.push_back(kAlphabet[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
    static const std::array<int, 256> table = decode_table();
    if (text.size() % 4 != 0) throw format_error("base64 length not a multiple of 4");

    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int vals[4];
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            const char c = text[i + k];
            if (c == '=') {
                // Padding is only legal in the last two positions of the
                // final quartet.
                if (i + 4 != text.size() || k < 2) {
                    throw format_error("unexpected base64 padding");
                }
                vals[k] = 0;
                ++pad;
            } else {
                const int v = table[static_cast<unsigned char>(c)];
                if (v < 0 || pad > 0) throw format_error("invalid base64 character");
                vals[k] = v;
            }
        }
        const std::uint32_t v = vals[0] << 18 | vals[1] << 12 | vals[2] << 6 | vals[3];
        out.push_back(v >> 16);
        if (pad < 2) out.push_back((v >> 8) & 0xFF);
        if (pad < 1) out.push_back(v & 0xFF);
    }
    return out;
}

} // namespace renal
