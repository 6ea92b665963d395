#include "renalwsi/visualization.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>
#include <vector>

#include "renalwsi/errors.hpp"

namespace renal {

Palette Palette::defaults() {
    Palette p;
    p.rgb = {{
        {76, 175, 80},   // normal          - green
        {255, 193, 7},   // oncocytoma      - amber
        {156, 39, 176},  // chromophobe_rcc - purple
        {244, 67, 54},   // clear_cell_rcc  - red
        {33, 150, 243},  // papillary_rcc   - blue
    }};
    return p;
}

void Palette::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw validation_error("palette alpha must be in [0,1]");
    }
    for (int a = 0; a < kNumClasses; ++a) {
        for (int b = a + 1; b < kNumClasses; ++b) {
            if (rgb[a] == rgb[b]) {
                throw validation_error("palette colors must be pairwise distinct");
            }
        }
    }
}

namespace {

struct Winner {
    std::int8_t cls = -1;
    float confidence = -1.0f;
};

std::uint8_t blend_channel(std::uint8_t base, std::uint8_t color, double alpha) {
    return static_cast<std::uint8_t>(
        std::llround((1.0 - alpha) * base + alpha * color));
}

// Box-average block mean, rounded half-up.
void block_mean(const ImageRGB& src, int x0, int y0, int x1, int y1,
                std::uint8_t out[3]) {
    std::uint64_t sum[3] = {0, 0, 0};
    for (int y = y0; y < y1; ++y) {
        const std::uint8_t* p = src.px(x0, y);
        for (int x = x0; x < x1; ++x, p += 3) {
            sum[0] += p[0];
            sum[1] += p[1];
            sum[2] += p[2];
        }
    }
    const std::uint64_t n = static_cast<std::uint64_t>(x1 - x0) * (y1 - y0);
    for (int ch = 0; ch < 3; ++ch) {
        out[ch] = static_cast<std::uint8_t>((sum[ch] + n / 2) / n);
    }
}

} // namespace

ImageRGB render_overlay(const SlideImage& slide,
                        std::span<const PatchPrediction> predictions, int patch_size,
                        const Palette& palette, int downsample) {
    palette.validate();
    if (patch_size < 1) throw validation_error("patch_size must be >= 1");
    if (downsample < 1) throw validation_error("downsample must be >= 1");

    const int w = slide.width();
    const int h = slide.height();

    // Full-resolution winner map: highest confidence, canonical order on ties.
    std::vector<Winner> winners(static_cast<std::size_t>(w) * h);
    for (const auto& pred : predictions) {
        if (pred.coord.x < 0 || pred.coord.y < 0 || pred.coord.x + patch_size > w ||
            pred.coord.y + patch_size > h) {
            throw validation_error("prediction footprint at (" +
                                   std::to_string(pred.coord.x) + "," +
                                   std::to_string(pred.coord.y) +
                                   ") outside slide bounds");
        }
        if (palette.hide_normal && pred.label == ClassLabel::Normal) continue;
        const std::int8_t cls = static_cast<std::int8_t>(label_index(pred.label));
        const float conf = static_cast<float>(pred.confidence);
        for (int dy = 0; dy < patch_size; ++dy) {
            Winner* row =
                winners.data() + static_cast<std::size_t>(pred.coord.y + dy) * w +
                pred.coord.x;
            for (int dx = 0; dx < patch_size; ++dx) {
                Winner& cur = row[dx];
                if (conf > cur.confidence ||
                    (conf == cur.confidence && cls < cur.cls)) {
                    cur = {cls, conf};
                }
            }
        }
    }

    const int ow = (w + downsample - 1) / downsample;
    const int oh = (h + downsample - 1) / downsample;
    ImageRGB out(ow, oh);

    for (int oy = 0; oy < oh; ++oy) {
        const int y0 = oy * downsample;
        const int y1 = std::min(h, y0 + downsample);
        for (int ox = 0; ox < ow; ++ox) {
            const int x0 = ox * downsample;
            const int x1 = std::min(w, x0 + downsample);

            std::uint8_t base[3];
            block_mean(slide.image, x0, y0, x1, y1, base);

            // Winning class across the block.
            Winner block_winner;
            for (int y = y0; y < y1; ++y) {
                const Winner* row = winners.data() + static_cast<std::size_t>(y) * w;
                for (int x = x0; x < x1; ++x) {
                    const Winner& cur = row[x];
                    if (cur.cls < 0) continue;
                    if (cur.confidence > block_winner.confidence ||
                        (cur.confidence == block_winner.confidence &&
                         (block_winner.cls < 0 || cur.cls < block_winner.cls))) {
                        block_winner = cur;
                    }
                }
            }

            std::uint8_t* dst = out.px(ox, oy);
            if (block_winner.cls < 0) {
                dst[0] = base[0];
                dst[1] = base[1];
                dst[2] = base[2];
            } else {
                const auto& color = palette.rgb[block_winner.cls];
                for (int ch = 0; ch < 3; ++ch) {
                    dst[ch] = blend_channel(base[ch], color[ch], palette.alpha);
                }
            }
        }
    }
    return out;
}

namespace {

// 5x7 bitmap glyphs, one byte per row, low 5 bits used (MSB of the 5 = left
// column). Covers the characters appearing in class names.
struct Glyph {
    char c;
    std::uint8_t rows[7];
};

constexpr Glyph kFont[] = {
    {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
    {'D', {0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
    {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
    {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
    {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {'N', {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
    {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
    {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x1B, 0x11}},
    {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04}},
    {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
    {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
};

const std::uint8_t* glyph_rows(char c) {
    for (const Glyph& g : kFont) {
        if (g.c == c) return g.rows;
    }
    return nullptr;
}

void draw_text(ImageRGB& img, int x, int y, const std::string& text,
               const std::array<std::uint8_t, 3>& color) {
    for (char raw : text) {
        const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(raw)));
        const std::uint8_t* rows = glyph_rows(c);
        if (rows) {
            for (int ry = 0; ry < 7; ++ry) {
                for (int rx = 0; rx < 5; ++rx) {
                    if (rows[ry] & (0x10 >> rx)) {
                        const int px = x + rx;
                        const int py = y + ry;
                        if (px >= 0 && px < img.width && py >= 0 && py < img.height) {
                            std::uint8_t* p = img.px(px, py);
                            p[0] = color[0];
                            p[1] = color[1];
                            p[2] = color[2];
                        }
                    }
                }
            }
        }
        x += 6;
    }
}

} // namespace

ImageRGB render_legend(const Palette& palette) {
    palette.validate();

    constexpr int kRowHeight = 14;
    constexpr int kSwatchWidth = 24;
    constexpr int kPad = 4;

    std::size_t longest = 0;
    for (const ClassLabel c : all_labels()) {
        longest = std::max(longest, std::string(label_name(c)).size());
    }
    const int width =
        kPad + kSwatchWidth + kPad + static_cast<int>(longest) * 6 + kPad;
    const int height = kPad + kNumClasses * kRowHeight + kPad;

    ImageRGB img(width, height, 255);
    for (int c = 0; c < kNumClasses; ++c) {
        const int top = kPad + c * kRowHeight;
        for (int y = top; y < top + kRowHeight - 4; ++y) {
            for (int x = kPad; x < kPad + kSwatchWidth; ++x) {
                std::uint8_t* p = img.px(x, y);
                p[0] = palette.rgb[c][0];
                p[1] = palette.rgb[c][1];
                p[2] = palette.rgb[c][2];
            }
        }
        draw_text(img, kPad + kSwatchWidth + kPad, top + 1,
                  std::string(label_name(label_from_index(c))), {0, 0, 0});
    }
    return img;
}

} // namespace renal
