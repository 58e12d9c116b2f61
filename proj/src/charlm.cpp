#include "prep/correct.hpp"

#include "prep/unicode.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <stdexcept>

namespace prep::lm {

namespace {
constexpr uint32_t kMagic = 0x504C4D31; // "PLM1"
constexpr int kBitsPerSymbol = 12;
constexpr uint16_t kMaxVocab = 4095;
} // namespace

int CharLM::char_id(char32_t c) const {
    auto it = ids_.find(c);
    return it == ids_.end() ? -1 : int(it->second);
}

uint64_t CharLM::pack(const uint16_t* ids, int len) {
    // Length tag in the top bits keeps contexts of different lengths
    // distinct even when short ones are prefixes of long ones.
    uint64_t key = uint64_t(len) << 60;
    for (int i = 0; i < len; ++i)
        key |= uint64_t(ids[i] + 1) << (kBitsPerSymbol * i);
    return key;
}

CharLM CharLM::train(std::string_view corpus_utf8, int order, double k) {
    if (order < 1 || order > 5)
        throw std::invalid_argument("CharLM: order must be in 1..5");
    if (k <= 0.0) throw std::invalid_argument("CharLM: add-k must be positive");
    std::u32string corpus = utf8_decode(corpus_utf8);
    if (corpus.empty()) throw std::invalid_argument("CharLM: empty corpus");

    CharLM lm;
    lm.order_ = order;
    lm.k_ = k;

    std::set<char32_t> charset(corpus.begin(), corpus.end());
    if (charset.size() > kMaxVocab)
        throw std::invalid_argument("CharLM: vocabulary exceeds 4095 characters");
    lm.vocab_.assign(charset.begin(), charset.end());
    for (size_t i = 0; i < lm.vocab_.size(); ++i) lm.ids_[lm.vocab_[i]] = uint16_t(i);

    std::vector<uint16_t> ids(corpus.size());
    for (size_t i = 0; i < corpus.size(); ++i) ids[i] = lm.ids_[corpus[i]];

    uint16_t buf[8];
    for (size_t i = 0; i < corpus.size(); ++i) {
        int max_len = std::min<int>(order - 1, int(i));
        for (int len = 0; len <= max_len; ++len) {
            for (int j = 0; j < len; ++j) buf[j] = ids[i - size_t(len) + size_t(j)];
            buf[len] = ids[i];
            ++lm.counts_[pack(buf, len + 1)];
            ++lm.totals_[pack(buf, len)];
        }
    }
    return lm;
}

double CharLM::prob(char32_t c, std::u32string_view context) const {
    const double v_plus_unk = double(vocab_.size()) + 1.0;
    int cid = char_id(c);

    // Longest usable context suffix made of known characters.
    int avail = std::min<int>(order_ - 1, int(context.size()));
    int len = 0;
    while (len < avail && char_id(context[context.size() - 1 - size_t(len)]) >= 0) ++len;
    uint16_t buf[8];
    for (int j = 0; j < len; ++j)
        buf[j] = uint16_t(char_id(context[context.size() - size_t(len) + size_t(j)]));

    for (int l = len; l >= 0; --l) {
        uint64_t ctx_key = pack(buf + (len - l), l);
        auto tot = totals_.find(ctx_key);
        if (tot == totals_.end()) continue; // back off to a shorter context
        double denom = double(tot->second) + k_ * v_plus_unk;
        double count = 0.0;
        if (cid >= 0) {
            uint16_t full[9];
            std::memcpy(full, buf + (len - l), size_t(l) * sizeof(uint16_t));
            full[l] = uint16_t(cid);
            auto it = counts_.find(pack(full, l + 1));
            if (it != counts_.end()) count = double(it->second);
        }
        // Unknown characters take the UNK slot's add-k mass.
        return (count + k_) / denom;
    }
    // Unreachable: the empty context always has a total.
    return k_ / (k_ * v_plus_unk);
}

double CharLM::log_prob(char32_t c, std::u32string_view context) const {
    return std::log(prob(c, context));
}

void CharLM::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("CharLM: cannot write " + path);
    auto w32 = [&](uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
    auto w64 = [&](uint64_t v) { f.write(reinterpret_cast<const char*>(&v), 8); };
    w32(kMagic);
    w32(1); // format version
    w32(uint32_t(order_));
    double k = k_;
    f.write(reinterpret_cast<const char*>(&k), 8);
    w32(uint32_t(vocab_.size()));
    for (char32_t c : vocab_) w32(uint32_t(c));

    std::vector<std::pair<uint64_t, uint32_t>> items(counts_.begin(), counts_.end());
    std::sort(items.begin(), items.end());
    w64(items.size());
    for (auto& [key, n] : items) {
        w64(key);
        w32(n);
    }
    items.assign(totals_.begin(), totals_.end());
    std::sort(items.begin(), items.end());
    w64(items.size());
    for (auto& [key, n] : items) {
        w64(key);
        w32(n);
    }
    if (!f) throw std::runtime_error("CharLM: write failed for " + path);
}

CharLM CharLM::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("CharLM: cannot open " + path);
    auto r32 = [&]() {
        uint32_t v = 0;
        f.read(reinterpret_cast<char*>(&v), 4);
        return v;
    };
    auto r64 = [&]() {
        uint64_t v = 0;
        f.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    if (r32() != kMagic) throw std::runtime_error("CharLM: bad magic in " + path);
    if (r32() != 1) throw std::runtime_error("CharLM: unsupported format version in " + path);
    CharLM lm;
    lm.order_ = int(r32());
    f.read(reinterpret_cast<char*>(&lm.k_), 8);
    uint32_t vs = r32();
    lm.vocab_.resize(vs);
    for (uint32_t i = 0; i < vs; ++i) {
        lm.vocab_[i] = char32_t(r32());
        lm.ids_[lm.vocab_[i]] = uint16_t(i);
    }
    uint64_t nc = r64();
    lm.counts_.reserve(size_t(nc) * 2);
    for (uint64_t i = 0; i < nc; ++i) {
        uint64_t key = r64();
        lm.counts_[key] = r32();
    }
    uint64_t nt = r64();
    lm.totals_.reserve(size_t(nt) * 2);
    for (uint64_t i = 0; i < nt; ++i) {
        uint64_t key = r64();
        lm.totals_[key] = r32();
    }
    if (!f) throw std::runtime_error("CharLM: truncated file " + path);
    return lm;
}

} // namespace prep::lm
