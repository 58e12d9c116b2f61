#include "prep/image.hpp"

#include <algorithm>
#include <cstring>

namespace prep {

namespace {

// Exact comparison of between-class variances expressed as fractions
// d^2 / (n0*n1) without overflow: compare quotients, then cross-multiplied
// remainders (remainders are < the 42-bit denominators, so the products
// stay within __int128).
struct Variance {
    __int128 num; // d^2 where d = s0*n1 - s1*n0
    int64_t den;  // n0*n1

    bool operator>(const Variance& o) const {
        __int128 q1 = num / den, r1 = num % den;
        __int128 q2 = o.num / o.den, r2 = o.num % o.den;
        if (q1 != q2) return q1 > q2;
        return r1 * o.den > r2 * den;
    }
    bool operator==(const Variance& o) const {
        __int128 q1 = num / den, r1 = num % den;
        __int128 q2 = o.num / o.den, r2 = o.num % o.den;
        return q1 == q2 && r1 * o.den == r2 * den;
    }
};

} // namespace

int otsu_threshold(const uint64_t histogram[256], uint64_t total) {
    if (total == 0)
        throw std::invalid_argument("otsu_threshold: empty image");

    int lowest = -1, highest = -1;
    for (int i = 0; i < 256; ++i) {
        if (histogram[i] > 0) {
            if (lowest < 0) lowest = i;
            highest = i;
        }
    }
    if (lowest == highest) return lowest; // single-class degenerate case

    uint64_t sum_all = 0;
    for (int i = 0; i < 256; ++i) sum_all += histogram[i] * uint64_t(i);

    bool have_best = false;
    Variance best{0, 1};
    int plateau_lo = 0, plateau_hi = 0;

    uint64_t n0 = 0, s0 = 0;
    for (int t = 0; t < 256; ++t) {
        n0 += histogram[t];
        s0 += histogram[t] * uint64_t(t);
        uint64_t n1 = total - n0;
        if (n0 == 0 || n1 == 0) continue;
        uint64_t s1 = sum_all - s0;
        __int128 d = __int128(s0) * n1 - __int128(s1) * n0;
        Variance v{d * d, int64_t(n0) * int64_t(n1)};
        if (!have_best || v > best) {
            have_best = true;
            best = v;
            plateau_lo = plateau_hi = t;
        } else if (v == best) {
            plateau_hi = t;
        }
    }
    return (plateau_lo + plateau_hi) / 2;
}

int otsu_threshold(const GrayImage& img) {
    if (img.empty())
        throw std::invalid_argument("otsu_threshold: empty image");
    uint64_t hist[256] = {};
    for (uint8_t p : img.data()) ++hist[p];
    return otsu_threshold(hist, img.pixel_count());
}

GrayImage otsu_binarize(const GrayImage& img) {
    const int t = otsu_threshold(img);
    GrayImage out(img.width(), img.height());
    const auto& src = img.data();
    auto& dst = out.data();
    for (size_t i = 0; i < src.size(); ++i) dst[i] = src[i] < t ? 0 : 255;
    return out;
}

double psnr(const GrayImage& a, const GrayImage& b) {
    if (!a.same_size(b))
        throw std::invalid_argument("psnr: dimension mismatch");
    uint64_t sq = 0;
    const auto& da = a.data();
    const auto& db = b.data();
    for (size_t i = 0; i < da.size(); ++i) {
        int d = int(da[i]) - int(db[i]);
        sq += uint64_t(d * d);
    }
    if (sq == 0) return std::numeric_limits<double>::infinity();
    double mse = double(sq) / double(da.size());
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

GrayImage pad_replicate(const GrayImage& img, int top, int left, int bottom, int right) {
    if (top < 0 || left < 0 || bottom < 0 || right < 0)
        throw std::invalid_argument("pad_replicate: negative pad");
    if (top == 0 && left == 0 && bottom == 0 && right == 0) return img;

    const int w = img.width(), h = img.height();
    GrayImage out(w + left + right, h + top + bottom);
    for (int y = 0; y < out.height(); ++y) {
        int sy = std::clamp(y - top, 0, h - 1);
        const uint8_t* src = img.row(sy);
        uint8_t* dst = out.row(y);
        std::memset(dst, src[0], size_t(left));
        std::memcpy(dst + left, src, size_t(w));
        std::memset(dst + left + w, src[w - 1], size_t(right));
    }
    return out;
}

GrayImage crop(const GrayImage& img, const Rect& r) {
    if (r.width < 1 || r.height < 1)
        throw std::invalid_argument("crop: empty rect");
    if (r.x0 < 0 || r.y0 < 0 || r.x0 + r.width > img.width() || r.y0 + r.height > img.height())
        throw std::invalid_argument("crop: rect outside image");
    GrayImage out(r.width, r.height);
    for (int y = 0; y < r.height; ++y)
        std::memcpy(out.row(y), img.row(r.y0 + y) + r.x0, size_t(r.width));
    return out;
}

GrayImage resize_bilinear(const GrayImage& img, int new_width, int new_height) {
    if (new_width < 1 || new_height < 1)
        throw std::invalid_argument("resize_bilinear: dimensions must be >= 1");
    if (new_width == img.width() && new_height == img.height()) return img;

    const int sw = img.width(), sh = img.height();
    GrayImage out(new_width, new_height);
    const double sx_scale = double(sw) / double(new_width);
    const double sy_scale = double(sh) / double(new_height);

    for (int y = 0; y < new_height; ++y) {
        double sy = (y + 0.5) * sy_scale - 0.5;
        int y0 = int(std::floor(sy));
        double fy = sy - y0;
        int y1 = std::clamp(y0 + 1, 0, sh - 1);
        y0 = std::clamp(y0, 0, sh - 1);
        const uint8_t* r0 = img.row(y0);
        const uint8_t* r1 = img.row(y1);
        uint8_t* dst = out.row(y);
        for (int x = 0; x < new_width; ++x) {
            double sx = (x + 0.5) * sx_scale - 0.5;
            int x0 = int(std::floor(sx));
            double fx = sx - x0;
            int x1 = std::clamp(x0 + 1, 0, sw - 1);
            x0 = std::clamp(x0, 0, sw - 1);
            double top = r0[x0] * (1.0 - fx) + r0[x1] * fx;
            double bot = r1[x0] * (1.0 - fx) + r1[x1] * fx;
            dst[x] = quantize(top * (1.0 - fy) + bot * fy);
        }
    }
    return out;
}

GrayImage resize_to_width(const GrayImage& img, int new_width) {
    if (new_width == img.width()) return img;
    int new_height = std::max(1, int(std::llround(double(img.height()) * new_width / img.width())));
    return resize_bilinear(img, new_width, new_height);
}

} // namespace prep
