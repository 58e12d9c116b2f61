#pragma once
// Builds a small, valid TrueType font in memory for hermetic tests: boxy
// glyphs for ASCII letters/digits/punctuation plus curved 'o'/'O' outlines
// to exercise the quadratic path. Checksums are filled in properly so the
// file is loadable by ordinary font tooling too.

#include <cstdint>
#include <cstring>
#include <map>
#include <string>
#include <vector>

namespace testfont {

namespace detail {

struct Buf {
    std::vector<uint8_t> bytes;
    void u8(uint8_t v) { bytes.push_back(v); }
    void u16(uint16_t v) {
        bytes.push_back(uint8_t(v >> 8));
        bytes.push_back(uint8_t(v));
    }
    void s16(int16_t v) { u16(uint16_t(v)); }
    void u32(uint32_t v) {
        u16(uint16_t(v >> 16));
        u16(uint16_t(v));
    }
    size_t size() const { return bytes.size(); }
    void pad_to(size_t align) {
        while (bytes.size() % align) bytes.push_back(0);
    }
};

struct Point {
    int16_t x, y;
    bool on;
};

inline std::vector<uint8_t> simple_glyph(const std::vector<std::vector<Point>>& contours) {
    Buf g;
    int16_t minx = 32767, miny = 32767, maxx = -32768, maxy = -32768;
    size_t n_points = 0;
    for (const auto& c : contours)
        for (const Point& p : c) {
            minx = std::min(minx, p.x);
            maxx = std::max(maxx, p.x);
            miny = std::min(miny, p.y);
            maxy = std::max(maxy, p.y);
            ++n_points;
        }
    g.s16(int16_t(contours.size()));
    g.s16(minx);
    g.s16(miny);
    g.s16(maxx);
    g.s16(maxy);
    uint16_t end = 0;
    for (const auto& c : contours) {
        end += uint16_t(c.size());
        g.u16(end - 1);
    }
    g.u16(0); // no instructions
    for (const auto& c : contours)
        for (const Point& p : c) g.u8(p.on ? 0x01 : 0x00); // long coords, no repeat
    int16_t prev = 0;
    for (const auto& c : contours)
        for (const Point& p : c) {
            g.s16(int16_t(p.x - prev));
            prev = p.x;
        }
    prev = 0;
    for (const auto& c : contours)
        for (const Point& p : c) {
            g.s16(int16_t(p.y - prev));
            prev = p.y;
        }
    g.pad_to(2);
    return g.bytes;
}

inline std::vector<std::vector<Point>> box(int16_t x0, int16_t y0, int16_t x1, int16_t y1) {
    return {{{x0, y0, true}, {x1, y0, true}, {x1, y1, true}, {x0, y1, true}}};
}

// Diamond with off-curve control points: a rounded blob.
inline std::vector<std::vector<Point>> blob(int16_t cx, int16_t cy, int16_t r) {
    return {{{cx, int16_t(cy - r), true},
             {int16_t(cx + r), cy, false},
             {cx, int16_t(cy + r), true},
             {int16_t(cx - r), cy, false}}};
}

inline uint32_t table_checksum(const uint8_t* data, size_t len) {
    uint32_t sum = 0;
    for (size_t i = 0; i < len; i += 4) {
        uint32_t v = 0;
        for (size_t k = 0; k < 4; ++k)
            v = (v << 8) | (i + k < len ? data[i + k] : 0);
        sum += v;
    }
    return sum;
}

} // namespace detail

// Characters covered by the test font.
inline const std::string& charset() {
    static const std::string cs =
        " abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789.,!?;:'-";
    return cs;
}

inline std::vector<uint8_t> build_ttf() {
    using namespace detail;

    // gid 0 = .notdef (empty), then one glyph per charset entry in order.
    const std::string& cs = charset();
    std::vector<std::vector<uint8_t>> glyphs;
    glyphs.push_back({}); // .notdef
    for (char ch : cs) {
        if (ch == ' ') {
            glyphs.push_back({});
        } else if (ch == 'o' || ch == 'O') {
            int16_t r = ch == 'O' ? 330 : 240;
            glyphs.push_back(simple_glyph(blob(350, ch == 'O' ? 350 : 240, r)));
        } else if (ch >= 'a' && ch <= 'z') {
            glyphs.push_back(simple_glyph(box(120, 0, 580, 480)));
        } else if (ch >= 'A' && ch <= 'Z') {
            glyphs.push_back(simple_glyph(box(100, 0, 600, 700)));
        } else if (ch >= '0' && ch <= '9') {
            glyphs.push_back(simple_glyph(box(140, 0, 560, 640)));
        } else {
            glyphs.push_back(simple_glyph(box(240, 0, 460, 180)));
        }
    }
    const uint16_t num_glyphs = uint16_t(glyphs.size());

    // glyf + loca (short format).
    Buf glyf;
    std::vector<uint16_t> loca_half;
    for (const auto& g : glyphs) {
        loca_half.push_back(uint16_t(glyf.size() / 2));
        glyf.bytes.insert(glyf.bytes.end(), g.begin(), g.end());
    }
    loca_half.push_back(uint16_t(glyf.size() / 2));
    Buf loca;
    for (uint16_t v : loca_half) loca.u16(v);

    Buf head;
    head.u32(0x00010000); // version
    head.u32(0);          // fontRevision
    head.u32(0);          // checkSumAdjustment (patched at the end)
    head.u32(0x5F0F3CF5); // magicNumber
    head.u16(0);          // flags
    head.u16(1000);       // unitsPerEm
    for (int i = 0; i < 4; ++i) head.u32(0); // created/modified
    head.s16(0);          // xMin
    head.s16(-250);       // yMin
    head.s16(700);        // xMax
    head.s16(750);        // yMax
    head.u16(0);          // macStyle
    head.u16(8);          // lowestRecPPEM
    head.s16(2);          // fontDirectionHint
    head.s16(0);          // indexToLocFormat = short
    head.s16(0);          // glyphDataFormat

    Buf hhea;
    hhea.u32(0x00010000);
    hhea.s16(750);  // ascender
    hhea.s16(-250); // descender
    hhea.s16(50);   // lineGap
    hhea.u16(700);  // advanceWidthMax
    hhea.s16(0);    // minLeftSideBearing
    hhea.s16(0);    // minRightSideBearing
    hhea.s16(700);  // xMaxExtent
    hhea.s16(1);    // caretSlopeRise
    hhea.s16(0);    // caretSlopeRun
    hhea.s16(0);    // caretOffset
    for (int i = 0; i < 4; ++i) hhea.s16(0);
    hhea.s16(0); // metricDataFormat
    hhea.u16(num_glyphs);

    Buf maxp;
    maxp.u32(0x00010000);
    maxp.u16(num_glyphs);
    for (int i = 0; i < 13; ++i) maxp.u16(0);

    Buf hmtx;
    hmtx.u16(500); // .notdef
    hmtx.s16(0);
    for (char ch : cs) {
        hmtx.u16(ch == ' ' ? 320 : 700);
        hmtx.s16(0);
    }

    // cmap format 4: contiguous runs of the charset mapped to gids.
    std::map<uint16_t, uint16_t> char_to_gid;
    for (size_t i = 0; i < cs.size(); ++i) char_to_gid[uint16_t(cs[i])] = uint16_t(i + 1);
    struct Seg {
        uint16_t start, end;
        int16_t delta;
    };
    std::vector<Seg> segs;
    for (auto it = char_to_gid.begin(); it != char_to_gid.end();) {
        uint16_t start = it->first, gid = it->second;
        uint16_t end = start;
        auto next = std::next(it);
        while (next != char_to_gid.end() && next->first == end + 1 &&
               next->second == uint16_t(gid + (end + 1 - start))) {
            end = next->first;
            ++next;
        }
        segs.push_back({start, end, int16_t(gid - start)});
        it = next;
    }
    segs.push_back({0xFFFF, 0xFFFF, 1}); // required terminator maps to gid 0
    Buf cmap;
    cmap.u16(0); // version
    cmap.u16(1); // one subtable
    cmap.u16(3); // platform: Windows
    cmap.u16(1); // encoding: Unicode BMP
    cmap.u32(12);
    uint16_t seg_count = uint16_t(segs.size());
    cmap.u16(4);                              // format
    cmap.u16(uint16_t(16 + 8 * seg_count));   // length
    cmap.u16(0);                              // language
    cmap.u16(uint16_t(seg_count * 2));        // segCountX2
    uint16_t search = 1, entry = 0;
    while (search * 2 <= seg_count) {
        search *= 2;
        ++entry;
    }
    cmap.u16(uint16_t(search * 2));
    cmap.u16(entry);
    cmap.u16(uint16_t((seg_count - search) * 2));
    for (const Seg& s : segs) cmap.u16(s.end);
    cmap.u16(0); // reservedPad
    for (const Seg& s : segs) cmap.u16(s.start);
    for (const Seg& s : segs) cmap.s16(s.delta);
    for (size_t i = 0; i < segs.size(); ++i) cmap.u16(0); // idRangeOffset

    struct Table {
        const char* tag;
        Buf* buf;
    };
    Buf glyf_buf = std::move(glyf);
    std::vector<Table> tables = {{"cmap", &cmap}, {"glyf", &glyf_buf}, {"head", &head},
                                 {"hhea", &hhea}, {"hmtx", &hmtx},     {"loca", &loca},
                                 {"maxp", &maxp}};

    Buf out;
    uint16_t n = uint16_t(tables.size());
    out.u32(0x00010000);
    out.u16(n);
    uint16_t sr = 1, es = 0;
    while (sr * 2 <= n) {
        sr *= 2;
        ++es;
    }
    out.u16(uint16_t(sr * 16));
    out.u16(es);
    out.u16(uint16_t(n * 16 - sr * 16));

    size_t record_base = out.size();
    for (const Table& t : tables) {
        out.u32(0); // tag placeholder
        out.u32(0); // checksum
        out.u32(0); // offset
        out.u32(0); // length
    }
    size_t head_table_offset = 0;
    for (size_t i = 0; i < tables.size(); ++i) {
        tables[i].buf->pad_to(4);
        size_t off = out.size();
        if (std::strcmp(tables[i].tag, "head") == 0) head_table_offset = off;
        out.bytes.insert(out.bytes.end(), tables[i].buf->bytes.begin(),
                         tables[i].buf->bytes.end());
        size_t rec = record_base + i * 16;
        auto put32 = [&](size_t at, uint32_t v) {
            out.bytes[at] = uint8_t(v >> 24);
            out.bytes[at + 1] = uint8_t(v >> 16);
            out.bytes[at + 2] = uint8_t(v >> 8);
            out.bytes[at + 3] = uint8_t(v);
        };
        put32(rec, uint32_t(tables[i].tag[0]) << 24 | uint32_t(tables[i].tag[1]) << 16 |
                       uint32_t(tables[i].tag[2]) << 8 | uint32_t(tables[i].tag[3]));
        put32(rec + 4, table_checksum(tables[i].buf->bytes.data(), tables[i].buf->size()));
        put32(rec + 8, uint32_t(off));
        put32(rec + 12, uint32_t(tables[i].buf->size()));
    }

    uint32_t whole = table_checksum(out.bytes.data(), out.size());
    uint32_t adjust = 0xB1B0AFBAu - whole;
    out.bytes[head_table_offset + 8] = uint8_t(adjust >> 24);
    out.bytes[head_table_offset + 9] = uint8_t(adjust >> 16);
    out.bytes[head_table_offset + 10] = uint8_t(adjust >> 8);
    out.bytes[head_table_offset + 11] = uint8_t(adjust);
    return out.bytes;
}

// Writes the font to dir/test_font.ttf (once) and returns the path.
inline std::string write_ttf(const std::string& dir) {
    std::string path = dir + "/test_font.ttf";
    std::vector<uint8_t> bytes = build_ttf();
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("testfont: cannot write " + path);
    std::fwrite(bytes.data(), 1, bytes.size(), f);
    std::fclose(f);
    return path;
}

} // namespace testfont
