#include "prep/font.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

namespace prep {

namespace {

struct Reader {
    const uint8_t* data;
    size_t size;

    void require(size_t off, size_t n) const {
        if (off + n > size || off + n < off)
            throw std::runtime_error("TrueTypeFont: truncated table data");
    }
    uint8_t u8(size_t off) const {
        require(off, 1);
        return data[off];
    }
    uint16_t u16(size_t off) const {
        require(off, 2);
        return uint16_t(data[off]) << 8 | data[off + 1];
    }
    int16_t s16(size_t off) const { return int16_t(u16(off)); }
    uint32_t u32(size_t off) const {
        require(off, 4);
        return uint32_t(data[off]) << 24 | uint32_t(data[off + 1]) << 16 |
               uint32_t(data[off + 2]) << 8 | data[off + 3];
    }
};

struct Point {
    double x = 0.0;
    double y = 0.0;
    bool on_curve = true;
};

using Contour = std::vector<Point>;

// 2x2 transform + offset, in font units.
struct Affine {
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0, dx = 0.0, dy = 0.0;
    Point apply(const Point& p) const {
        return {a * p.x + c * p.y + dx, b * p.x + d * p.y + dy, p.on_curve};
    }
};

constexpr int kMaxCompositeDepth = 5;

} // namespace

struct TrueTypeFont::Impl {
    std::vector<uint8_t> bytes;
    Reader rd{nullptr, 0};

    std::map<uint32_t, std::pair<uint32_t, uint32_t>> tables; // tag -> (offset, length)

    double units_per_em = 1000.0;
    bool loca_long = false;
    uint16_t num_glyphs = 0;
    int16_t hhea_ascent = 0, hhea_descent = 0, hhea_line_gap = 0;
    uint16_t num_h_metrics = 0;
    uint32_t loca_off = 0, glyf_off = 0, glyf_len = 0, hmtx_off = 0;
    uint32_t cmap_sub_off = 0;
    uint16_t cmap_format = 0;

    void parse();
    uint16_t lookup_glyph(char32_t c) const;
    uint16_t advance_units(uint16_t gid) const;
    // Glyph outline in font units; appends to out.
    void glyph_contours(uint16_t gid, const Affine& xf, int depth, std::vector<Contour>& out) const;
};

void TrueTypeFont::Impl::parse() {
    rd = Reader{bytes.data(), bytes.size()};
    uint32_t version = rd.u32(0);
    if (version == 0x4F54544Fu) // 'OTTO'
        throw std::runtime_error("TrueTypeFont: CFF outlines are not supported");
    if (version != 0x00010000u && version != 0x74727565u) // 1.0 or 'true'
        throw std::runtime_error("TrueTypeFont: not a TrueType font");

    uint16_t num_tables = rd.u16(4);
    for (uint16_t i = 0; i < num_tables; ++i) {
        size_t rec = 12 + size_t(i) * 16;
        uint32_t tag = rd.u32(rec);
        uint32_t off = rd.u32(rec + 8);
        uint32_t len = rd.u32(rec + 12);
        rd.require(off, len);
        tables[tag] = {off, len};
    }

    auto table = [&](const char* name, bool required) -> std::pair<uint32_t, uint32_t> {
        uint32_t tag = uint32_t(name[0]) << 24 | uint32_t(name[1]) << 16 |
                       uint32_t(name[2]) << 8 | uint32_t(name[3]);
        auto it = tables.find(tag);
        if (it == tables.end()) {
            if (required)
                throw std::runtime_error(std::string("TrueTypeFont: missing table ") + name);
            return {0, 0};
        }
        return it->second;
    };

    auto [head, head_len] = table("head", true);
    (void)head_len;
    units_per_em = rd.u16(head + 18);
    if (units_per_em <= 0) throw std::runtime_error("TrueTypeFont: bad unitsPerEm");
    loca_long = rd.s16(head + 50) != 0;

    auto [maxp, maxp_len] = table("maxp", true);
    (void)maxp_len;
    num_glyphs = rd.u16(maxp + 4);

    auto [hhea, hhea_len] = table("hhea", true);
    (void)hhea_len;
    hhea_ascent = rd.s16(hhea + 4);
    hhea_descent = rd.s16(hhea + 6);
    hhea_line_gap = rd.s16(hhea + 8);
    num_h_metrics = rd.u16(hhea + 34);
    if (num_h_metrics == 0) throw std::runtime_error("TrueTypeFont: no horizontal metrics");

    hmtx_off = table("hmtx", true).first;
    loca_off = table("loca", true).first;
    auto [g_off, g_len] = table("glyf", true);
    glyf_off = g_off;
    glyf_len = g_len;

    // Pick the best cmap subtable: prefer format 12, then 4, then 6/0.
    auto [cmap, cmap_len] = table("cmap", true);
    (void)cmap_len;
    uint16_t n_sub = rd.u16(cmap + 2);
    int best_rank = -1;
    for (uint16_t i = 0; i < n_sub; ++i) {
        uint32_t sub = cmap + rd.u32(cmap + 4 + size_t(i) * 8 + 4);
        uint16_t fmt = rd.u16(sub);
        int rank = fmt == 12 ? 3 : fmt == 4 ? 2 : fmt == 6 ? 1 : fmt == 0 ? 0 : -1;
        if (rank > best_rank) {
            best_rank = rank;
            cmap_sub_off = sub;
            cmap_format = fmt;
        }
    }
    if (best_rank < 0) throw std::runtime_error("TrueTypeFont: no usable cmap subtable");
}

uint16_t TrueTypeFont::Impl::lookup_glyph(char32_t c) const {
    const uint32_t sub = cmap_sub_off;
    switch (cmap_format) {
    case 0: {
        if (c > 255) return 0;
        return rd.u8(sub + 6 + c);
    }
    case 4: {
        if (c > 0xFFFF) return 0;
        uint16_t seg_x2 = rd.u16(sub + 6);
        uint32_t ends = sub + 14;
        uint32_t starts = ends + seg_x2 + 2;
        uint32_t deltas = starts + seg_x2;
        uint32_t range_offs = deltas + seg_x2;
        for (uint16_t i = 0; i < seg_x2; i += 2) {
            if (rd.u16(ends + i) >= c) {
                uint16_t start = rd.u16(starts + i);
                if (start > c) return 0;
                uint16_t delta = rd.u16(deltas + i);
                uint16_t ro = rd.u16(range_offs + i);
                if (ro == 0) return uint16_t((c + delta) & 0xFFFF);
                uint32_t idx = range_offs + i + ro + 2u * (uint32_t(c) - start);
                uint16_t gid = rd.u16(idx);
                return gid == 0 ? 0 : uint16_t((gid + delta) & 0xFFFF);
            }
        }
        return 0;
    }
    case 6: {
        uint16_t first = rd.u16(sub + 6);
        uint16_t count = rd.u16(sub + 8);
        if (c < first || c >= uint32_t(first) + count) return 0;
        return rd.u16(sub + 10 + 2 * (c - first));
    }
    case 12: {
        uint32_t n_groups = rd.u32(sub + 12);
        uint32_t lo = 0, hi = n_groups;
        while (lo < hi) {
            uint32_t mid = (lo + hi) / 2;
            uint32_t rec = sub + 16 + mid * 12;
            uint32_t start = rd.u32(rec), end = rd.u32(rec + 4);
            if (c < start)
                hi = mid;
            else if (c > end)
                lo = mid + 1;
            else
                return uint16_t(rd.u32(rec + 8) + (c - start));
        }
        return 0;
    }
    default:
        return 0;
    }
}

uint16_t TrueTypeFont::Impl::advance_units(uint16_t gid) const {
    uint16_t i = std::min(gid, uint16_t(num_h_metrics - 1));
    return rd.u16(hmtx_off + size_t(i) * 4);
}

void TrueTypeFont::Impl::glyph_contours(uint16_t gid, const Affine& xf, int depth,
                                        std::vector<Contour>& out) const {
    if (gid >= num_glyphs || depth > kMaxCompositeDepth) return;

    uint32_t start, end;
    if (loca_long) {
        start = rd.u32(loca_off + size_t(gid) * 4);
        end = rd.u32(loca_off + size_t(gid) * 4 + 4);
    } else {
        start = 2u * rd.u16(loca_off + size_t(gid) * 2);
        end = 2u * rd.u16(loca_off + size_t(gid) * 2 + 2);
    }
    if (end <= start) return; // empty glyph (e.g. space)
    uint32_t g = glyf_off + start;

    int16_t n_contours = rd.s16(g);
    if (n_contours >= 0) {
        // Simple glyph.
        uint32_t p = g + 10;
        std::vector<uint16_t> end_pts(static_cast<size_t>(n_contours));
        for (int i = 0; i < n_contours; ++i) end_pts[size_t(i)] = rd.u16(p + 2u * i);
        p += 2u * n_contours;
        uint16_t n_points = n_contours ? end_pts.back() + 1 : 0;
        uint16_t instr_len = rd.u16(p);
        p += 2u + instr_len;

        std::vector<uint8_t> flags(n_points);
        for (uint16_t i = 0; i < n_points;) {
            uint8_t f = rd.u8(p++);
            flags[i++] = f;
            if (f & 0x08) { // REPEAT
                uint8_t rep = rd.u8(p++);
                while (rep-- && i < n_points) flags[i++] = f;
            }
        }

        std::vector<Point> pts(n_points);
        int32_t x = 0;
        for (uint16_t i = 0; i < n_points; ++i) {
            uint8_t f = flags[i];
            if (f & 0x02) { // X_SHORT
                uint8_t d = rd.u8(p++);
                x += (f & 0x10) ? d : -int32_t(d);
            } else if (!(f & 0x10)) {
                x += rd.s16(p);
                p += 2;
            }
            pts[i].x = x;
        }
        int32_t y = 0;
        for (uint16_t i = 0; i < n_points; ++i) {
            uint8_t f = flags[i];
            if (f & 0x04) { // Y_SHORT
                uint8_t d = rd.u8(p++);
                y += (f & 0x20) ? d : -int32_t(d);
            } else if (!(f & 0x20)) {
                y += rd.s16(p);
                p += 2;
            }
            pts[i].y = y;
            pts[i].on_curve = (f & 0x01) != 0;
        }

        uint16_t first = 0;
        for (int ci = 0; ci < n_contours; ++ci) {
            uint16_t last = end_pts[size_t(ci)];
            Contour c;
            for (uint16_t i = first; i <= last; ++i) c.push_back(xf.apply(pts[i]));
            if (c.size() >= 2) out.push_back(std::move(c));
            first = last + 1;
        }
        return;
    }

    // Composite glyph.
    uint32_t p = g + 10;
    while (true) {
        uint16_t flags = rd.u16(p);
        uint16_t comp_gid = rd.u16(p + 2);
        p += 4;
        double dx = 0, dy = 0;
        if (flags & 0x0001) { // ARG_1_AND_2_ARE_WORDS
            if (flags & 0x0002) { // ARGS_ARE_XY_VALUES
                dx = rd.s16(p);
                dy = rd.s16(p + 2);
            }
            p += 4;
        } else {
            if (flags & 0x0002) {
                dx = int8_t(rd.u8(p));
                dy = int8_t(rd.u8(p + 1));
            }
            p += 2;
        }
        Affine comp;
        auto f2dot14 = [&](uint32_t off) { return double(rd.s16(off)) / 16384.0; };
        if (flags & 0x0008) { // WE_HAVE_A_SCALE
            comp.a = comp.d = f2dot14(p);
            p += 2;
        } else if (flags & 0x0040) { // X_AND_Y_SCALE
            comp.a = f2dot14(p);
            comp.d = f2dot14(p + 2);
            p += 4;
        } else if (flags & 0x0080) { // TWO_BY_TWO
            comp.a = f2dot14(p);
            comp.b = f2dot14(p + 2);
            comp.c = f2dot14(p + 4);
            comp.d = f2dot14(p + 6);
            p += 8;
        }
        comp.dx = dx;
        comp.dy = dy;

        // Compose: component transform first, then the incoming one.
        Affine total;
        total.a = xf.a * comp.a + xf.c * comp.b;
        total.b = xf.b * comp.a + xf.d * comp.b;
        total.c = xf.a * comp.c + xf.c * comp.d;
        total.d = xf.b * comp.c + xf.d * comp.d;
        total.dx = xf.a * comp.dx + xf.c * comp.dy + xf.dx;
        total.dy = xf.b * comp.dx + xf.d * comp.dy + xf.dy;
        glyph_contours(comp_gid, total, depth + 1, out);

        if (!(flags & 0x0020)) break; // MORE_COMPONENTS
    }
}

TrueTypeFont::TrueTypeFont() : impl_(new Impl) {}
TrueTypeFont::TrueTypeFont(TrueTypeFont&&) noexcept = default;
TrueTypeFont& TrueTypeFont::operator=(TrueTypeFont&&) noexcept = default;
TrueTypeFont::~TrueTypeFont() = default;

TrueTypeFont TrueTypeFont::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("TrueTypeFont: cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    if (bytes.size() < 12) throw std::runtime_error("TrueTypeFont: file too small " + path);
    return from_memory(std::move(bytes));
}

TrueTypeFont TrueTypeFont::from_memory(std::vector<uint8_t> bytes) {
    TrueTypeFont font;
    font.impl_->bytes = std::move(bytes);
    font.impl_->parse();
    return font;
}

bool TrueTypeFont::has_glyph(char32_t c) const { return impl_->lookup_glyph(c) != 0; }
uint16_t TrueTypeFont::glyph_index(char32_t c) const { return impl_->lookup_glyph(c); }
double TrueTypeFont::units_per_em() const { return impl_->units_per_em; }

double TrueTypeFont::ascent(double px_size) const {
    return impl_->hhea_ascent * px_size / impl_->units_per_em;
}
double TrueTypeFont::descent(double px_size) const {
    return impl_->hhea_descent * px_size / impl_->units_per_em;
}
double TrueTypeFont::line_gap(double px_size) const {
    return impl_->hhea_line_gap * px_size / impl_->units_per_em;
}
double TrueTypeFont::advance(char32_t c, double px_size) const {
    return impl_->advance_units(impl_->lookup_glyph(c)) * px_size / impl_->units_per_em;
}

GlyphBitmap TrueTypeFont::rasterize(char32_t c, double px_size, double degrees) const {
    GlyphBitmap bm;
    uint16_t gid = impl_->lookup_glyph(c);
    std::vector<Contour> contours;
    impl_->glyph_contours(gid, Affine{}, 0, contours);
    if (contours.empty()) return bm;

    // Font units -> device pixels (y flips downward), then flatten curves.
    const double scale = px_size / impl_->units_per_em;
    struct Seg {
        double x0, y0, x1, y1;
    };
    std::vector<std::vector<std::pair<double, double>>> polys;
    for (const Contour& contour : contours) {
        // Normalize so the walk starts on-curve; an all-off contour starts
        // at the midpoint of its first two points.
        size_t n = contour.size();
        size_t start = n;
        for (size_t i = 0; i < n; ++i)
            if (contour[i].on_curve) {
                start = i;
                break;
            }
        std::vector<Point> pts;
        if (start == n) {
            Point mid{(contour[0].x + contour[1].x) / 2, (contour[0].y + contour[1].y) / 2, true};
            pts.push_back(mid);
            for (size_t i = 1; i < n; ++i) pts.push_back(contour[i]);
            pts.push_back(contour[0]);
        } else {
            for (size_t i = 0; i < n; ++i) pts.push_back(contour[(start + i) % n]);
        }
        pts.push_back(pts.front()); // close

        std::vector<std::pair<double, double>> poly;
        auto emit = [&](double x, double y) { poly.emplace_back(x * scale, -y * scale); };
        auto quad = [&](const Point& p0, const Point& ctl, const Point& p1) {
            double ext = std::abs(ctl.x - p0.x) + std::abs(ctl.y - p0.y) +
                         std::abs(p1.x - ctl.x) + std::abs(p1.y - ctl.y);
            int steps = std::clamp(int(std::sqrt(ext * scale)) + 2, 3, 24);
            for (int s = 1; s <= steps; ++s) {
                double t = double(s) / steps;
                double u = 1.0 - t;
                emit(u * u * p0.x + 2 * u * t * ctl.x + t * t * p1.x,
                     u * u * p0.y + 2 * u * t * ctl.y + t * t * p1.y);
            }
        };

        emit(pts[0].x, pts[0].y);
        size_t i = 1;
        Point cur = pts[0];
        while (i < pts.size()) {
            const Point& p = pts[i];
            if (p.on_curve) {
                emit(p.x, p.y);
                cur = p;
                ++i;
            } else {
                Point nxt = (i + 1 < pts.size()) ? pts[i + 1] : pts.front();
                if (nxt.on_curve) {
                    quad(cur, p, nxt);
                    cur = nxt;
                    i += 2;
                } else {
                    Point mid{(p.x + nxt.x) / 2, (p.y + nxt.y) / 2, true};
                    quad(cur, p, mid);
                    cur = mid;
                    ++i;
                }
            }
        }
        if (poly.size() >= 3) polys.push_back(std::move(poly));
    }
    if (polys.empty()) return bm;

    if (degrees != 0.0) {
        double minx = 1e30, miny = 1e30, maxx = -1e30, maxy = -1e30;
        for (auto& poly : polys)
            for (auto& [x, y] : poly) {
                minx = std::min(minx, x);
                maxx = std::max(maxx, x);
                miny = std::min(miny, y);
                maxy = std::max(maxy, y);
            }
        double cx = (minx + maxx) / 2, cy = (miny + maxy) / 2;
        double rad = degrees * M_PI / 180.0, cs = std::cos(rad), sn = std::sin(rad);
        for (auto& poly : polys)
            for (auto& [x, y] : poly) {
                double rx = x - cx, ry = y - cy;
                x = cx + rx * cs - ry * sn;
                y = cy + rx * sn + ry * cs;
            }
    }

    double minx = 1e30, miny = 1e30, maxx = -1e30, maxy = -1e30;
    std::vector<Seg> segs;
    for (auto& poly : polys) {
        for (size_t i = 0; i + 1 < poly.size(); ++i) {
            segs.push_back({poly[i].first, poly[i].second, poly[i + 1].first, poly[i + 1].second});
        }
        for (auto& [x, y] : poly) {
            minx = std::min(minx, x);
            maxx = std::max(maxx, x);
            miny = std::min(miny, y);
            maxy = std::max(maxy, y);
        }
    }

    int bx0 = int(std::floor(minx)), by0 = int(std::floor(miny));
    int bx1 = int(std::ceil(maxx)) + 1, by1 = int(std::ceil(maxy)) + 1;
    bm.width = bx1 - bx0;
    bm.height = by1 - by0;
    bm.left = bx0;
    bm.top = by0;
    if (bm.width <= 0 || bm.height <= 0 || bm.width > 4096 || bm.height > 4096) {
        bm = GlyphBitmap{};
        return bm;
    }
    bm.coverage.assign(size_t(bm.width) * bm.height, 0.0f);

    // Nonzero-winding scanline fill, 4 subsamples per pixel row, fractional
    // horizontal span coverage.
    constexpr int kSub = 4;
    std::vector<std::pair<double, int>> crossings;
    for (int row = 0; row < bm.height; ++row) {
        float* out_row = bm.coverage.data() + size_t(row) * bm.width;
        for (int s = 0; s < kSub; ++s) {
            double ys = by0 + row + (s + 0.5) / kSub;
            crossings.clear();
            for (const Seg& e : segs) {
                if (e.y0 == e.y1) continue;
                bool down = e.y1 > e.y0;
                double ylo = down ? e.y0 : e.y1, yhi = down ? e.y1 : e.y0;
                if (ys < ylo || ys >= yhi) continue;
                double t = (ys - e.y0) / (e.y1 - e.y0);
                crossings.emplace_back(e.x0 + t * (e.x1 - e.x0), down ? 1 : -1);
            }
            if (crossings.empty()) continue;
            std::sort(crossings.begin(), crossings.end());
            int winding = 0;
            double span_start = 0.0;
            for (auto& [x, dir] : crossings) {
                if (winding == 0 && dir != 0) span_start = x;
                int prev = winding;
                winding += dir;
                if (prev != 0 && winding == 0) {
                    double xa = std::max(span_start, double(bx0));
                    double xb = std::min(x, double(bx1));
                    if (xb <= xa) continue;
                    int ixa = int(std::floor(xa)) - bx0;
                    int ixb = int(std::floor(xb - 1e-12)) - bx0;
                    ixa = std::clamp(ixa, 0, bm.width - 1);
                    ixb = std::clamp(ixb, 0, bm.width - 1);
                    for (int ix = ixa; ix <= ixb; ++ix) {
                        double px0 = bx0 + ix, px1 = px0 + 1.0;
                        double overlap = std::min(xb, px1) - std::max(xa, px0);
                        if (overlap > 0) out_row[ix] += float(overlap / kSub);
                    }
                }
            }
        }
        for (int ix = 0; ix < bm.width; ++ix)
            out_row[ix] = std::min(out_row[ix], 1.0f);
    }
    return bm;
}

} // namespace prep
