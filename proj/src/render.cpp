#include "prep/synthdoc.hpp"

#include "prep/rng.hpp"
#include "prep/unicode.hpp"

#include <cmath>
#include <stdexcept>

namespace prep::synth {

namespace {

double sample(Rng& rng, const Range& r) { return rng.uniform(r.lo, r.hi); }

// Magnitude from the range, sign from a separate coin.
double sample_signed(Rng& rng, const Range& r) {
    double m = rng.uniform(r.lo, r.hi);
    return rng.next_below(2) ? m : -m;
}

struct PageTransform {
    double cx, cy;  // rotation center
    double cos_t, sin_t;
    double bend_amp;
    double page_width;

    // Bend is applied along the untilted baseline, then the page tilt
    // rotates everything about the page center.
    void apply(double x, double y, double& ox, double& oy) const {
        y += bend_amp * std::sin(2.0 * M_PI * x / page_width);
        double rx = x - cx, ry = y - cy;
        ox = cx + rx * cos_t - ry * sin_t;
        oy = cy + rx * sin_t + ry * cos_t;
    }
};

void blit_glyph(GrayImage& page, const GlyphBitmap& bm, int px, int py) {
    for (int j = 0; j < bm.height; ++j) {
        int y = py + bm.top + j;
        if (y < 0 || y >= page.height()) continue;
        const float* src = bm.coverage.data() + size_t(j) * bm.width;
        uint8_t* dst = page.row(y);
        for (int i = 0; i < bm.width; ++i) {
            int x = px + bm.left + i;
            if (x < 0 || x >= page.width()) continue;
            uint8_t ink = quantize(255.0 * (1.0 - src[i]));
            if (ink < dst[x]) dst[x] = ink;
        }
    }
}

} // namespace

RenderResult render_base(const RenderSpec& spec, uint64_t seed) {
    TrueTypeFont font = TrueTypeFont::load(spec.font_path);
    return render_base(spec, font, seed);
}

RenderResult render_base(const RenderSpec& spec, const TrueTypeFont& font, uint64_t seed) {
    if (spec.text.empty()) throw std::invalid_argument("render_base: empty text");
    if (spec.page_width < 2 * spec.margin + 8 || spec.page_height < 2 * spec.margin + 8)
        throw std::invalid_argument("render_base: page smaller than margins");

    Rng rng(seed);
    RenderResult res;
    res.image = GrayImage(spec.page_width, spec.page_height, 255);
    res.tilt_degrees = sample(rng, spec.page_tilt_range);
    res.bend_amplitude = sample(rng, spec.bend_amplitude_range);

    PageTransform xf;
    xf.cx = spec.page_width / 2.0;
    xf.cy = spec.page_height / 2.0;
    double rad = res.tilt_degrees * M_PI / 180.0;
    xf.cos_t = std::cos(rad);
    xf.sin_t = std::sin(rad);
    xf.bend_amp = res.bend_amplitude;
    xf.page_width = spec.page_width;

    const double size = spec.font_size;
    const double ascent = font.ascent(size);
    const double descent = font.descent(size); // <= 0
    const double nominal_line = ascent - descent + font.line_gap(size);
    const double left = spec.margin;
    const double right = spec.page_width - spec.margin;
    const double bottom = spec.page_height - spec.margin;

    // Paragraphs on '\n'; words on runs of blanks.
    std::u32string text = utf8_decode(spec.text);
    std::vector<std::vector<std::u32string>> paragraphs;
    {
        std::vector<std::u32string> cur_par;
        std::u32string cur_word;
        auto flush_word = [&]() {
            if (!cur_word.empty()) {
                cur_par.push_back(cur_word);
                cur_word.clear();
            }
        };
        for (char32_t c : text) {
            if (c == U'\n') {
                flush_word();
                if (!cur_par.empty()) paragraphs.push_back(std::move(cur_par));
                cur_par = {};
            } else if (c == U' ' || c == U'\t' || c == U'\r') {
                flush_word();
            } else {
                cur_word.push_back(c);
            }
        }
        flush_word();
        if (!cur_par.empty()) paragraphs.push_back(std::move(cur_par));
    }

    double y = spec.margin + ascent;
    size_t glyphs_rendered = 0;
    bool out_of_space = false;

    std::u32string line_text;
    double line_start_x = left, line_start_y = y;
    double pen_x = left;

    auto close_line = [&](double end_x, double end_y) {
        if (line_text.empty()) return;
        LineInfo li;
        li.index = int(res.lines.size());
        li.text = utf8_encode(line_text);
        xf.apply(line_start_x, line_start_y, li.baseline_x0, li.baseline_y0);
        xf.apply(end_x, end_y, li.baseline_x1, li.baseline_y1);
        res.lines.push_back(std::move(li));
        line_text.clear();
    };

    auto new_line = [&](double indent) {
        close_line(pen_x, y);
        y += nominal_line * (1.0 + sample(rng, spec.line_spacing_jitter));
        pen_x = left + indent;
        line_start_x = pen_x;
        line_start_y = y;
        if (y - descent > bottom) out_of_space = true;
    };

    auto word_width = [&](const std::u32string& w) {
        double total = 0.0;
        for (char32_t c : w) total += font.advance(c, size);
        return total;
    };

    const double space_adv = font.has_glyph(U' ') ? font.advance(U' ', size) : size * 0.33;

    for (size_t pi = 0; pi < paragraphs.size() && !out_of_space; ++pi) {
        double indent = sample(rng, spec.indent_range);
        if (pi > 0) new_line(indent);
        else {
            pen_x = left + indent;
            line_start_x = pen_x;
            line_start_y = y;
        }
        if (out_of_space) break;

        bool first_word = true;
        for (const std::u32string& word : paragraphs[pi]) {
            if (out_of_space) break;
            double w = word_width(word);
            if (!first_word) {
                if (pen_x + space_adv + w > right && pen_x > line_start_x) {
                    new_line(0.0);
                    if (out_of_space) break;
                } else {
                    pen_x += space_adv;
                    line_text.push_back(U' ');
                }
            }
            first_word = false;

            for (char32_t c : word) {
                double adv = font.advance(c, size);
                if (pen_x + adv > right && pen_x > line_start_x) {
                    // Hard wrap inside over-long words.
                    new_line(0.0);
                    if (out_of_space) break;
                }
                double dx = sample_signed(rng, spec.char_offset_range);
                double dy = sample_signed(rng, spec.char_offset_range);
                double rot = sample_signed(rng, spec.char_rotation_range);
                double extra = adv * sample(rng, spec.char_spacing_jitter);

                if (font.has_glyph(c)) {
                    double gx, gy;
                    xf.apply(pen_x, y, gx, gy);
                    GlyphBitmap bm = font.rasterize(c, size, res.tilt_degrees + rot);
                    if (!bm.coverage.empty()) {
                        blit_glyph(res.image, bm, int(std::lround(gx + dx)),
                                   int(std::lround(gy + dy)));
                        ++glyphs_rendered;
                    }
                }
                line_text.push_back(c);
                pen_x += adv + extra;
            }
        }
    }
    close_line(pen_x, y);

    if (glyphs_rendered == 0)
        throw std::runtime_error("render_base: no renderable glyph in text");

    for (size_t i = 0; i < res.lines.size(); ++i) {
        if (i) res.rendered_text += "\n";
        res.rendered_text += res.lines[i].text;
    }
    return res;
}

GrayImage stitch_pages(const std::vector<GrayImage>& pages) {
    if (pages.size() < 2)
        throw std::invalid_argument("stitch_pages: need at least two pages");
    int min_width = pages[0].width();
    for (const auto& p : pages) min_width = std::min(min_width, p.width());

    std::vector<GrayImage> scaled;
    scaled.reserve(pages.size());
    int total_height = 0;
    for (const auto& p : pages) {
        scaled.push_back(resize_to_width(p, min_width));
        total_height += scaled.back().height();
    }

    GrayImage out(min_width, total_height);
    int y = 0;
    for (const auto& p : scaled) {
        for (int r = 0; r < p.height(); ++r)
            std::copy(p.row(r), p.row(r) + min_width, out.row(y + r));
        y += p.height();
    }
    return out;
}

} // namespace prep::synth
