#pragma once
// Deterministic random generation. Every stochastic stage in the toolkit
// draws from this generator so that (inputs, seed) fully determine output
// bytes on any platform. The standard <random> distributions are
// implementation-defined and must not be used anywhere in the library.

#include <cstdint>
#include <vector>

namespace prep {

// One scramble round of the splitmix64 finalizer (a 64-bit bijection).
inline uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Per-item seed derivation: seed_i = mix64(master ^ (i+1)*phi64).
// Documented in README; dataset generation and page workers rely on it to
// stay byte-stable regardless of scheduling order.
inline uint64_t derive_seed(uint64_t master, uint64_t index) {
    return mix64(master ^ (0x9E3779B97F4A7C15ULL * (index + 1)));
}

class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

    // Unbiased integer in [0, n) via rejection.
    uint64_t next_below(uint64_t n) {
        if (n <= 1) return 0;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    // [0, 1) with 53 random bits.
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Inclusive integer range.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        if (hi <= lo) return lo;
        return lo + int64_t(next_below(uint64_t(hi - lo) + 1));
    }

    bool bernoulli(double p) { return next_double() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = size_t(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_;
};

} // namespace prep
