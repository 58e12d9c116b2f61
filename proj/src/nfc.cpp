// Canonical (de)composition data for the Latin repertoire: Latin-1
// Supplement and Latin Extended-A. Sufficient for NFC over the languages
// this toolkit targets; other scripts pass through untouched.

#include "prep/textalign.hpp"

#include <algorithm>
#include <unordered_map>

namespace prep::align {

namespace {

struct Triple {
    char32_t composed, base, mark;
};

// (composed, base, combining mark); canonical decompositions only.
constexpr Triple kLatinTriples[] = {
    {0x00C0, U'A', 0x0300}, {0x00C1, U'A', 0x0301}, {0x00C2, U'A', 0x0302},
    {0x00C3, U'A', 0x0303}, {0x00C4, U'A', 0x0308}, {0x00C5, U'A', 0x030A},
    {0x00C7, U'C', 0x0327}, {0x00C8, U'E', 0x0300}, {0x00C9, U'E', 0x0301},
    {0x00CA, U'E', 0x0302}, {0x00CB, U'E', 0x0308}, {0x00CC, U'I', 0x0300},
    {0x00CD, U'I', 0x0301}, {0x00CE, U'I', 0x0302}, {0x00CF, U'I', 0x0308},
    {0x00D1, U'N', 0x0303}, {0x00D2, U'O', 0x0300}, {0x00D3, U'O', 0x0301},
    {0x00D4, U'O', 0x0302}, {0x00D5, U'O', 0x0303}, {0x00D6, U'O', 0x0308},
    {0x00D9, U'U', 0x0300}, {0x00DA, U'U', 0x0301}, {0x00DB, U'U', 0x0302},
    {0x00DC, U'U', 0x0308}, {0x00DD, U'Y', 0x0301},
    {0x00E0, U'a', 0x0300}, {0x00E1, U'a', 0x0301}, {0x00E2, U'a', 0x0302},
    {0x00E3, U'a', 0x0303}, {0x00E4, U'a', 0x0308}, {0x00E5, U'a', 0x030A},
    {0x00E7, U'c', 0x0327}, {0x00E8, U'e', 0x0300}, {0x00E9, U'e', 0x0301},
    {0x00EA, U'e', 0x0302}, {0x00EB, U'e', 0x0308}, {0x00EC, U'i', 0x0300},
    {0x00ED, U'i', 0x0301}, {0x00EE, U'i', 0x0302}, {0x00EF, U'i', 0x0308},
    {0x00F1, U'n', 0x0303}, {0x00F2, U'o', 0x0300}, {0x00F3, U'o', 0x0301},
    {0x00F4, U'o', 0x0302}, {0x00F5, U'o', 0x0303}, {0x00F6, U'o', 0x0308},
    {0x00F9, U'u', 0x0300}, {0x00FA, U'u', 0x0301}, {0x00FB, U'u', 0x0302},
    {0x00FC, U'u', 0x0308}, {0x00FD, U'y', 0x0301}, {0x00FF, U'y', 0x0308},
    {0x0100, U'A', 0x0304}, {0x0101, U'a', 0x0304}, {0x0102, U'A', 0x0306},
    {0x0103, U'a', 0x0306}, {0x0104, U'A', 0x0328}, {0x0105, U'a', 0x0328},
    {0x0106, U'C', 0x0301}, {0x0107, U'c', 0x0301}, {0x0108, U'C', 0x0302},
    {0x0109, U'c', 0x0302}, {0x010A, U'C', 0x0307}, {0x010B, U'c', 0x0307},
    {0x010C, U'C', 0x030C}, {0x010D, U'c', 0x030C}, {0x010E, U'D', 0x030C},
    {0x010F, U'd', 0x030C}, {0x0112, U'E', 0x0304}, {0x0113, U'e', 0x0304},
    {0x0114, U'E', 0x0306}, {0x0115, U'e', 0x0306}, {0x0116, U'E', 0x0307},
    {0x0117, U'e', 0x0307}, {0x0118, U'E', 0x0328}, {0x0119, U'e', 0x0328},
    {0x011A, U'E', 0x030C}, {0x011B, U'e', 0x030C}, {0x011C, U'G', 0x0302},
    {0x011D, U'g', 0x0302}, {0x011E, U'G', 0x0306}, {0x011F, U'g', 0x0306},
    {0x0120, U'G', 0x0307}, {0x0121, U'g', 0x0307}, {0x0122, U'G', 0x0327},
    {0x0123, U'g', 0x0327}, {0x0124, U'H', 0x0302}, {0x0125, U'h', 0x0302},
    {0x0128, U'I', 0x0303}, {0x0129, U'i', 0x0303}, {0x012A, U'I', 0x0304},
    {0x012B, U'i', 0x0304}, {0x012C, U'I', 0x0306}, {0x012D, U'i', 0x0306},
    {0x012E, U'I', 0x0328}, {0x012F, U'i', 0x0328}, {0x0130, U'I', 0x0307},
    {0x0134, U'J', 0x0302}, {0x0135, U'j', 0x0302}, {0x0136, U'K', 0x0327},
    {0x0137, U'k', 0x0327}, {0x0139, U'L', 0x0301}, {0x013A, U'l', 0x0301},
    {0x013B, U'L', 0x0327}, {0x013C, U'l', 0x0327}, {0x013D, U'L', 0x030C},
    {0x013E, U'l', 0x030C}, {0x0143, U'N', 0x0301}, {0x0144, U'n', 0x0301},
    {0x0145, U'N', 0x0327}, {0x0146, U'n', 0x0327}, {0x0147, U'N', 0x030C},
    {0x0148, U'n', 0x030C}, {0x014C, U'O', 0x0304}, {0x014D, U'o', 0x0304},
    {0x014E, U'O', 0x0306}, {0x014F, U'o', 0x0306}, {0x0150, U'O', 0x030B},
    {0x0151, U'o', 0x030B}, {0x0154, U'R', 0x0301}, {0x0155, U'r', 0x0301},
    {0x0156, U'R', 0x0327}, {0x0157, U'r', 0x0327}, {0x0158, U'R', 0x030C},
    {0x0159, U'r', 0x030C}, {0x015A, U'S', 0x0301}, {0x015B, U's', 0x0301},
    {0x015C, U'S', 0x0302}, {0x015D, U's', 0x0302}, {0x015E, U'S', 0x0327},
    {0x015F, U's', 0x0327}, {0x0160, U'S', 0x030C}, {0x0161, U's', 0x030C},
    {0x0162, U'T', 0x0327}, {0x0163, U't', 0x0327}, {0x0164, U'T', 0x030C},
    {0x0165, U't', 0x030C}, {0x0168, U'U', 0x0303}, {0x0169, U'u', 0x0303},
    {0x016A, U'U', 0x0304}, {0x016B, U'u', 0x0304}, {0x016C, U'U', 0x0306},
    {0x016D, U'u', 0x0306}, {0x016E, U'U', 0x030A}, {0x016F, U'u', 0x030A},
    {0x0170, U'U', 0x030B}, {0x0171, U'u', 0x030B}, {0x0172, U'U', 0x0328},
    {0x0173, U'u', 0x0328}, {0x0174, U'W', 0x0302}, {0x0175, U'w', 0x0302},
    {0x0176, U'Y', 0x0302}, {0x0177, U'y', 0x0302}, {0x0178, U'Y', 0x0308},
    {0x0179, U'Z', 0x0301}, {0x017A, U'z', 0x0301}, {0x017B, U'Z', 0x0307},
    {0x017C, U'z', 0x0307}, {0x017D, U'Z', 0x030C}, {0x017E, U'z', 0x030C},
};

int combining_class(char32_t c) {
    if (c < 0x0300 || c > 0x036F) return 0;
    if (c <= 0x0315) return 230;
    if (c <= 0x0319) return 220;
    if (c == 0x031A) return 232;
    if (c == 0x031B) return 216;
    if (c <= 0x0320) return 220;
    if (c <= 0x0322) return 202;
    if (c <= 0x0326) return 220;
    if (c <= 0x0328) return 202;
    if (c <= 0x0333) return 220;
    if (c <= 0x0338) return 1;
    if (c <= 0x033C) return 220;
    if (c <= 0x0344) return 230;
    if (c == 0x0345) return 240;
    if (c == 0x0346) return 230;
    if (c <= 0x0349) return 220;
    if (c <= 0x034C) return 230;
    if (c <= 0x034E) return 220;
    if (c == 0x034F) return 0;
    if (c <= 0x0352) return 230;
    if (c <= 0x0356) return 220;
    if (c == 0x0357) return 230;
    if (c == 0x0358) return 232;
    if (c <= 0x035A) return 220;
    if (c == 0x035B) return 230;
    if (c == 0x035C) return 233;
    if (c <= 0x035E) return 234;
    if (c == 0x035F) return 233;
    if (c <= 0x0361) return 234;
    if (c == 0x0362) return 233;
    return 230; // 0363..036F
}

const std::unordered_map<char32_t, std::pair<char32_t, char32_t>>& decomp_map() {
    static const auto* m = [] {
        auto* map = new std::unordered_map<char32_t, std::pair<char32_t, char32_t>>;
        for (const Triple& t : kLatinTriples) (*map)[t.composed] = {t.base, t.mark};
        return map;
    }();
    return *m;
}

const std::unordered_map<uint64_t, char32_t>& compose_map() {
    static const auto* m = [] {
        auto* map = new std::unordered_map<uint64_t, char32_t>;
        for (const Triple& t : kLatinTriples)
            (*map)[(uint64_t(t.base) << 32) | t.mark] = t.composed;
        return map;
    }();
    return *m;
}

} // namespace

std::u32string nfc_latin(std::u32string_view s) {
    // Decompose (recursively, though the table is single-level).
    std::u32string dec;
    dec.reserve(s.size());
    const auto& dmap = decomp_map();
    for (char32_t c : s) {
        std::u32string stack(1, c);
        std::u32string expanded;
        while (!stack.empty()) {
            char32_t top = stack.back();
            stack.pop_back();
            auto it = dmap.find(top);
            if (it == dmap.end()) {
                expanded.push_back(top);
            } else {
                stack.push_back(it->second.second);
                stack.push_back(it->second.first);
            }
        }
        dec += expanded;
    }

    // Canonical ordering of combining runs (stable by combining class).
    size_t i = 0;
    while (i < dec.size()) {
        if (combining_class(dec[i]) == 0) {
            ++i;
            continue;
        }
        size_t j = i;
        while (j < dec.size() && combining_class(dec[j]) != 0) ++j;
        std::stable_sort(dec.begin() + i, dec.begin() + j,
                         [](char32_t a, char32_t b) {
                             return combining_class(a) < combining_class(b);
                         });
        i = j;
    }

    // Canonical composition.
    const auto& cmap = compose_map();
    std::u32string out;
    out.reserve(dec.size());
    ptrdiff_t last_starter = -1;
    int prev_cc = 0;
    for (char32_t c : dec) {
        int cc = combining_class(c);
        if (last_starter >= 0 && cc > 0) {
            bool blocked = out.size() > size_t(last_starter) + 1 && prev_cc >= cc;
            if (!blocked) {
                auto it = cmap.find((uint64_t(out[size_t(last_starter)]) << 32) | c);
                if (it != cmap.end()) {
                    out[size_t(last_starter)] = it->second;
                    continue;
                }
            }
        }
        if (cc == 0) {
            last_starter = ptrdiff_t(out.size());
            prev_cc = 0;
        } else {
            prev_cc = cc;
        }
        out.push_back(c);
    }
    return out;
}

} // namespace prep::align
