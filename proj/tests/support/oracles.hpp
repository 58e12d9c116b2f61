#pragma once
// Independent reference implementations used to freeze expected values.
// These deliberately take the dumbest correct path (per-threshold pixel
// loops, memoized recursion, scalar accumulation) and never call the code
// paths they check.

#include "prep/image.hpp"
#include "prep/rng.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace oracles {

// Exhaustive 256-threshold between-class-variance search with the
// plateau-midpoint tie rule. Split at t is {<= t} vs {> t}; thresholds with
// an empty class are skipped; a single-intensity image returns that value.
inline int brute_force_otsu(const prep::GrayImage& img) {
    long double best = -1.0L;
    int lo = -1, hi = -1;
    int min_v = 255, max_v = 0;
    for (uint8_t p : img.data()) {
        min_v = std::min<int>(min_v, p);
        max_v = std::max<int>(max_v, p);
    }
    if (min_v == max_v) return min_v;

    for (int t = 0; t < 256; ++t) {
        uint64_t n0 = 0, n1 = 0, s0 = 0, s1 = 0;
        for (uint8_t p : img.data()) {
            if (p <= t) {
                ++n0;
                s0 += p;
            } else {
                ++n1;
                s1 += p;
            }
        }
        if (n0 == 0 || n1 == 0) continue;
        long double mu0 = (long double)(s0) / n0;
        long double mu1 = (long double)(s1) / n1;
        long double w0 = (long double)(n0), w1 = (long double)(n1);
        long double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (var > best) {
            best = var;
            lo = hi = t;
        } else if (var == best) {
            hi = t;
        }
    }
    return (lo + hi) / 2;
}

// Memoized top-down recursion on the textbook definition.
inline uint64_t recursive_edit_distance(const std::u32string& a, const std::u32string& b) {
    std::vector<int64_t> memo((a.size() + 1) * (b.size() + 1), -1);
    size_t stride = b.size() + 1;
    auto rec = [&](auto&& self, size_t i, size_t j) -> uint64_t {
        if (i == 0) return j;
        if (j == 0) return i;
        int64_t& m = memo[i * stride + j];
        if (m >= 0) return uint64_t(m);
        uint64_t best = self(self, i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1);
        best = std::min(best, self(self, i - 1, j) + 1);
        best = std::min(best, self(self, i, j - 1) + 1);
        m = int64_t(best);
        return best;
    };
    return rec(rec, a.size(), b.size());
}

// Scalar-loop AMP over a set of (gt, pred) pairs: per-pixel PSNR on the
// union of brute-force Otsu masks, position-wise averaging, plain mean.
struct NaiveAmpResult {
    double amp = 0.0;
    uint64_t defined = 0;
};

inline NaiveAmpResult naive_amp(const std::vector<std::pair<prep::GrayImage, prep::GrayImage>>& pairs,
                                int crop_per_side) {
    if (pairs.empty()) throw std::invalid_argument("naive_amp: no pairs");
    const int w = pairs[0].first.width(), h = pairs[0].first.height();
    std::vector<double> sum(size_t(w) * h, 0.0);
    std::vector<uint64_t> count(size_t(w) * h, 0);

    for (const auto& [gt, pred] : pairs) {
        int tg = brute_force_otsu(gt);
        int tp = brute_force_otsu(pred);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                bool fg = gt.at(x, y) < tg || pred.at(x, y) < tp;
                if (!fg) continue;
                double d = double(gt.at(x, y)) - double(pred.at(x, y));
                double e = d * d;
                double p = e == 0.0 ? 100.0 : 10.0 * std::log10(255.0 * 255.0 / e);
                sum[size_t(y) * w + x] += p;
                count[size_t(y) * w + x] += 1;
            }
        }
    }

    NaiveAmpResult res;
    double total = 0.0;
    for (int y = crop_per_side; y < h - crop_per_side; ++y) {
        for (int x = crop_per_side; x < w - crop_per_side; ++x) {
            size_t i = size_t(y) * w + x;
            if (count[i] == 0) continue;
            total += sum[i] / double(count[i]);
            ++res.defined;
        }
    }
    if (res.defined == 0) throw std::runtime_error("naive_amp: empty region");
    res.amp = total / double(res.defined);
    return res;
}

inline prep::GrayImage random_image(prep::Rng& rng, int w, int h) {
    prep::GrayImage img(w, h);
    for (auto& p : img.data()) p = uint8_t(rng.next_below(256));
    return img;
}

} // namespace oracles
