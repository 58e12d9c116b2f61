#include "prep/filters.hpp"

#include <algorithm>
#include <cmath>

namespace prep {

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
    if (sigma <= 0.0) return img;

    const int radius = std::max(1, int(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(size_t(radius) * 2 + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double w = std::exp(-(double(i) * i) / (2.0 * sigma * sigma));
        kernel[size_t(i + radius)] = w;
        sum += w;
    }
    for (double& w : kernel) w /= sum;

    const int w = img.width(), h = img.height();
    std::vector<double> tmp(size_t(w) * h);

    // Horizontal pass (stays in double until the vertical pass quantizes).
    for (int y = 0; y < h; ++y) {
        const uint8_t* src = img.row(y);
        double* dst = tmp.data() + size_t(y) * w;
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[size_t(i + radius)] * src[std::clamp(x + i, 0, w - 1)];
            dst[x] = acc;
        }
    }

    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        uint8_t* dst = out.row(y);
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[size_t(i + radius)] * tmp[size_t(std::clamp(y + i, 0, h - 1)) * w + x];
            dst[x] = quantize(acc);
        }
    }
    return out;
}

namespace {

template <typename Op>
GrayImage morph3x3(const GrayImage& img, int iterations, Op op) {
    GrayImage cur = img;
    const int w = img.width(), h = img.height();
    for (int it = 0; it < iterations; ++it) {
        GrayImage next(w, h);
        for (int y = 0; y < h; ++y) {
            const uint8_t* rows[3] = {
                cur.row(std::max(y - 1, 0)),
                cur.row(y),
                cur.row(std::min(y + 1, h - 1)),
            };
            uint8_t* dst = next.row(y);
            for (int x = 0; x < w; ++x) {
                int xl = std::max(x - 1, 0), xr = std::min(x + 1, w - 1);
                uint8_t v = rows[0][xl];
                for (const uint8_t* r : rows) {
                    v = op(v, r[xl]);
                    v = op(v, r[x]);
                    v = op(v, r[xr]);
                }
                dst[x] = v;
            }
        }
        cur = std::move(next);
    }
    return cur;
}

} // namespace

GrayImage dilate3x3(const GrayImage& img, int iterations) {
    return morph3x3(img, iterations, [](uint8_t a, uint8_t b) { return std::max(a, b); });
}

GrayImage erode3x3(const GrayImage& img, int iterations) {
    return morph3x3(img, iterations, [](uint8_t a, uint8_t b) { return std::min(a, b); });
}

GrayImage median3x3(const GrayImage& img) {
    const int w = img.width(), h = img.height();
    GrayImage out(w, h);
    uint8_t win[9];
    for (int y = 0; y < h; ++y) {
        const uint8_t* r0 = img.row(std::max(y - 1, 0));
        const uint8_t* r1 = img.row(y);
        const uint8_t* r2 = img.row(std::min(y + 1, h - 1));
        uint8_t* dst = out.row(y);
        for (int x = 0; x < w; ++x) {
            int xl = std::max(x - 1, 0), xr = std::min(x + 1, w - 1);
            win[0] = r0[xl]; win[1] = r0[x]; win[2] = r0[xr];
            win[3] = r1[xl]; win[4] = r1[x]; win[5] = r1[xr];
            win[6] = r2[xl]; win[7] = r2[x]; win[8] = r2[xr];
            std::nth_element(win, win + 4, win + 9);
            dst[x] = win[4];
        }
    }
    return out;
}

} // namespace prep
