#pragma once
// Minimal TrueType (glyf outline) loader and rasterizer. Covers the table
// subset needed to render document pages: cmap formats 0/4/6/12, simple and
// composite glyphs, horizontal metrics. CFF-outline OpenType fonts are
// rejected at load time.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace prep {

// Antialiased glyph raster. coverage is row-major in [0,1]; (left, top) is
// the offset of the bitmap's top-left corner from the pen position, with y
// growing downward.
struct GlyphBitmap {
    int width = 0;
    int height = 0;
    int left = 0;
    int top = 0;
    std::vector<float> coverage;
};

class TrueTypeFont {
public:
    static TrueTypeFont load(const std::string& path);
    static TrueTypeFont from_memory(std::vector<uint8_t> bytes);

    bool has_glyph(char32_t c) const;
    uint16_t glyph_index(char32_t c) const; // 0 = .notdef

    double units_per_em() const;
    // Metrics in pixels at the given size.
    double ascent(double px_size) const;
    double descent(double px_size) const; // negative or zero
    double line_gap(double px_size) const;
    double advance(char32_t c, double px_size) const;

    // Rasterizes the glyph at px_size, rotated by `degrees` about the
    // glyph's own bounding-box center. Empty outline yields a 0x0 bitmap.
    GlyphBitmap rasterize(char32_t c, double px_size, double degrees = 0.0) const;

    TrueTypeFont(TrueTypeFont&&) noexcept;
    TrueTypeFont& operator=(TrueTypeFont&&) noexcept;
    ~TrueTypeFont();

private:
    TrueTypeFont();
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace prep
