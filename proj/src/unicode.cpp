#include "prep/unicode.hpp"

namespace prep {

std::u32string utf8_decode(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    size_t i = 0;
    while (i < s.size()) {
        uint8_t b0 = uint8_t(s[i]);
        char32_t c = 0xFFFD;
        size_t len = 1;
        if (b0 < 0x80) {
            c = b0;
        } else if ((b0 & 0xE0) == 0xC0 && i + 1 < s.size() && (uint8_t(s[i + 1]) & 0xC0) == 0x80) {
            c = (char32_t(b0 & 0x1F) << 6) | (uint8_t(s[i + 1]) & 0x3F);
            len = 2;
            if (c < 0x80) c = 0xFFFD;
        } else if ((b0 & 0xF0) == 0xE0 && i + 2 < s.size() && (uint8_t(s[i + 1]) & 0xC0) == 0x80 &&
                   (uint8_t(s[i + 2]) & 0xC0) == 0x80) {
            c = (char32_t(b0 & 0x0F) << 12) | (char32_t(uint8_t(s[i + 1]) & 0x3F) << 6) |
                (uint8_t(s[i + 2]) & 0x3F);
            len = 3;
            if (c < 0x800 || (c >= 0xD800 && c <= 0xDFFF)) c = 0xFFFD;
        } else if ((b0 & 0xF8) == 0xF0 && i + 3 < s.size() && (uint8_t(s[i + 1]) & 0xC0) == 0x80 &&
                   (uint8_t(s[i + 2]) & 0xC0) == 0x80 && (uint8_t(s[i + 3]) & 0xC0) == 0x80) {
            c = (char32_t(b0 & 0x07) << 18) | (char32_t(uint8_t(s[i + 1]) & 0x3F) << 12) |
                (char32_t(uint8_t(s[i + 2]) & 0x3F) << 6) | (uint8_t(s[i + 3]) & 0x3F);
            len = 4;
            if (c < 0x10000 || c > 0x10FFFF) c = 0xFFFD;
        }
        if (c == 0xFFFD) len = 1;
        out.push_back(c);
        i += len;
    }
    return out;
}

std::string utf8_encode(char32_t c) {
    std::string out;
    if (c < 0x80) {
        out.push_back(char(c));
    } else if (c < 0x800) {
        out.push_back(char(0xC0 | (c >> 6)));
        out.push_back(char(0x80 | (c & 0x3F)));
    } else if (c < 0x10000) {
        out.push_back(char(0xE0 | (c >> 12)));
        out.push_back(char(0x80 | ((c >> 6) & 0x3F)));
        out.push_back(char(0x80 | (c & 0x3F)));
    } else {
        out.push_back(char(0xF0 | (c >> 18)));
        out.push_back(char(0x80 | ((c >> 12) & 0x3F)));
        out.push_back(char(0x80 | ((c >> 6) & 0x3F)));
        out.push_back(char(0x80 | (c & 0x3F)));
    }
    return out;
}

std::string utf8_encode(std::u32string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char32_t c : s) out += utf8_encode(c);
    return out;
}

} // namespace prep
