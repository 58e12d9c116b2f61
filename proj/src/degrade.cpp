#include "prep/synthdoc.hpp"

#include "prep/filters.hpp"
#include "prep/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace prep::synth {

DegradationConfig DegradationConfig::preset(int level) {
    if (level < 1 || level > 4)
        throw std::invalid_argument("DegradationConfig::preset: level must be 1..4");
    DegradationConfig c;
    c.level = level;
    static const double noise_hi[4] = {10, 30, 50, 50};
    static const double blur_hi[4] = {1, 1, 2, 2};
    static const double bg_hi[4] = {0.1, 0.3, 0.6, 0.6};
    static const double stain_hi[4] = {0.3, 0.6, 0.8, 0.8};
    static const int stains_hi[4] = {1, 3, 5, 5};
    static const double contrast_lo[4] = {0.6, 0.6, 0.6, 0.3};
    static const double spots_div[4] = {3000, 2000, 1000, 1000};
    static const int patch_sz_hi[4] = {3, 5, 5, 5};
    static const double patches_div[4] = {500, 300, 200, 100};
    static const int lines_hi[4] = {4, 6, 8, 10};
    int i = level - 1;
    c.noise_factor = {0, noise_hi[i]};
    c.scale_factor = {0.2, 1.0};
    c.gaussian_blur = {0, blur_hi[i]};
    c.background_intensity = {0, bg_hi[i]};
    c.stain_transparency = {0, stain_hi[i]};
    c.max_stains = {0, stains_hi[i]};
    c.contrast_factor = {contrast_lo[i], 1.0};
    c.black_spots_per_page = {0, 1.0 / spots_div[i]};
    c.white_patch_size = {0, patch_sz_hi[i]};
    c.white_patches_per_page = {0, 1.0 / patches_div[i]};
    c.line_artifacts = {0, lines_hi[i]};
    c.dilation_iterations = {0, 2};
    c.erosion_iterations = {0, 2};
    c.binarize_probability = 0.10;
    return c;
}

DegradationConfig DegradationConfig::identity() {
    DegradationConfig c;
    c.level = 0;
    c.binarize_probability = 0.0;
    return c;
}

namespace {

double sample(Rng& rng, const Range& r) { return rng.uniform(r.lo, r.hi); }
int sample_int(Rng& rng, const IntRange& r) { return int(rng.uniform_int(r.lo, r.hi)); }

GrayImage apply_noise(const GrayImage& img, Rng& rng, double amp) {
    GrayImage out(img.width(), img.height());
    const auto& src = img.data();
    auto& dst = out.data();
    for (size_t i = 0; i < src.size(); ++i)
        dst[i] = quantize(src[i] + rng.uniform(-amp, amp));
    return out;
}

GrayImage apply_rescale(const GrayImage& img, double scale) {
    int dw = std::max<int>(1, int(std::llround(img.width() * scale)));
    int dh = std::max<int>(1, int(std::llround(img.height() * scale)));
    if (dw == img.width() && dh == img.height()) return img;
    GrayImage small = resize_bilinear(img, dw, dh);
    return resize_bilinear(small, img.width(), img.height());
}

// Low-frequency value-noise field in [0,1]: two octaves of bilinearly
// interpolated random lattices.
GrayImage apply_background(const GrayImage& img, Rng& rng, double intensity) {
    const int w = img.width(), h = img.height();
    auto lattice_field = [&](int cell, std::vector<double>& field) {
        int gw = w / cell + 2, gh = h / cell + 2;
        std::vector<double> grid(size_t(gw) * gh);
        for (double& g : grid) g = rng.next_double();
        field.resize(size_t(w) * h);
        for (int y = 0; y < h; ++y) {
            double gy = double(y) / cell;
            int y0 = int(gy);
            double fy = gy - y0;
            for (int x = 0; x < w; ++x) {
                double gx = double(x) / cell;
                int x0 = int(gx);
                double fx = gx - x0;
                const double* g0 = grid.data() + size_t(y0) * gw;
                const double* g1 = g0 + gw;
                double top = g0[x0] * (1 - fx) + g0[x0 + 1] * fx;
                double bot = g1[x0] * (1 - fx) + g1[x0 + 1] * fx;
                field[size_t(y) * w + x] = top * (1 - fy) + bot * fy;
            }
        }
    };
    int coarse = std::max(16, std::min(w, h) / 6);
    std::vector<double> f1, f2;
    lattice_field(coarse, f1);
    lattice_field(std::max(8, coarse / 3), f2);

    GrayImage out(w, h);
    const auto& src = img.data();
    auto& dst = out.data();
    for (size_t i = 0; i < src.size(); ++i) {
        double field = 0.65 * f1[i] + 0.35 * f2[i];
        dst[i] = quantize(src[i] * (1.0 - intensity * field));
    }
    return out;
}

GrayImage apply_stains(const GrayImage& img, Rng& rng, int count, double alpha) {
    GrayImage out = img;
    const int w = img.width(), h = img.height();
    double rmax = std::max(4.0, std::min(w, h) / 4.0);
    double rmin = std::max(2.0, std::min(w, h) / 16.0);
    for (int s = 0; s < count; ++s) {
        double cx = rng.uniform(0, w);
        double cy = rng.uniform(0, h);
        double rx = rng.uniform(rmin, rmax);
        double ry = rng.uniform(rmin, rmax);
        double phi = rng.uniform(0, M_PI);
        double tone = rng.uniform(40, 140);
        double softness = rng.uniform(0.5, 2.0);
        double cp = std::cos(phi), sp = std::sin(phi);
        int x0 = std::max(0, int(cx - std::max(rx, ry)) - 1);
        int x1 = std::min(w - 1, int(cx + std::max(rx, ry)) + 1);
        int y0 = std::max(0, int(cy - std::max(rx, ry)) - 1);
        int y1 = std::min(h - 1, int(cy + std::max(rx, ry)) + 1);
        for (int y = y0; y <= y1; ++y) {
            uint8_t* row = out.row(y);
            for (int x = x0; x <= x1; ++x) {
                double ux = (x - cx) * cp + (y - cy) * sp;
                double uy = -(x - cx) * sp + (y - cy) * cp;
                double d2 = (ux / rx) * (ux / rx) + (uy / ry) * (uy / ry);
                if (d2 >= 1.0) continue;
                double weight = std::pow(1.0 - d2, softness) * alpha;
                row[x] = quantize(row[x] * (1.0 - weight) + tone * weight);
            }
        }
    }
    return out;
}

GrayImage apply_black_spots(const GrayImage& img, Rng& rng, int count) {
    GrayImage out = img;
    for (int i = 0; i < count; ++i) {
        int x = int(rng.next_below(uint64_t(img.width())));
        int y = int(rng.next_below(uint64_t(img.height())));
        out.at(x, y) = 0;
    }
    return out;
}

GrayImage apply_white_patches(const GrayImage& img, Rng& rng, int count, const IntRange& size) {
    GrayImage out = img;
    for (int i = 0; i < count; ++i) {
        int pw = sample_int(rng, size);
        int ph = sample_int(rng, size);
        int x = int(rng.next_below(uint64_t(img.width())));
        int y = int(rng.next_below(uint64_t(img.height())));
        for (int yy = y; yy < std::min(y + ph, img.height()); ++yy)
            for (int xx = x; xx < std::min(x + pw, img.width()); ++xx)
                out.at(xx, yy) = 255;
    }
    return out;
}

GrayImage apply_lines(const GrayImage& img, Rng& rng, int count) {
    GrayImage out = img;
    const int w = img.width(), h = img.height();
    for (int i = 0; i < count; ++i) {
        double x0 = rng.uniform(0, w), y0 = rng.uniform(0, h);
        double x1 = rng.uniform(0, w), y1 = rng.uniform(0, h);
        int width = int(rng.uniform_int(1, 3));
        uint8_t tone = rng.next_below(2) ? 0 : 255;
        double half = width / 2.0;
        int bx0 = std::max(0, int(std::min(x0, x1) - half) - 1);
        int bx1 = std::min(w - 1, int(std::max(x0, x1) + half) + 1);
        int by0 = std::max(0, int(std::min(y0, y1) - half) - 1);
        int by1 = std::min(h - 1, int(std::max(y0, y1) + half) + 1);
        double dx = x1 - x0, dy = y1 - y0;
        double len2 = dx * dx + dy * dy;
        for (int y = by0; y <= by1; ++y) {
            uint8_t* row = out.row(y);
            for (int x = bx0; x <= bx1; ++x) {
                double t = len2 > 0 ? ((x - x0) * dx + (y - y0) * dy) / len2 : 0.0;
                t = std::clamp(t, 0.0, 1.0);
                double px = x0 + t * dx, py = y0 + t * dy;
                double dist2 = (x - px) * (x - px) + (y - py) * (y - py);
                if (dist2 <= half * half) row[x] = tone;
            }
        }
    }
    return out;
}

GrayImage apply_contrast(const GrayImage& img, double factor) {
    GrayImage out(img.width(), img.height());
    const auto& src = img.data();
    auto& dst = out.data();
    for (size_t i = 0; i < src.size(); ++i)
        dst[i] = quantize(127.5 + factor * (src[i] - 127.5));
    return out;
}

} // namespace

GrayImage degrade(const GrayImage& img, const DegradationConfig& cfg, uint64_t seed,
                  DegradeMeta* meta_out) {
    if (img.empty()) throw std::invalid_argument("degrade: empty image");
    Rng rng(seed);

    const double hw = double(img.pixel_count());
    DegradeMeta meta;

    // One parameter draw per operator, in canonical order, before the
    // shuffle; application then consumes further draws in shuffled order.
    meta.noise_amplitude = sample(rng, cfg.noise_factor);
    meta.scale = sample(rng, cfg.scale_factor);
    meta.blur_sigma = sample(rng, cfg.gaussian_blur);
    meta.background = sample(rng, cfg.background_intensity);
    meta.stain_alpha = sample(rng, cfg.stain_transparency);
    meta.stains = sample_int(rng, cfg.max_stains);
    meta.contrast = sample(rng, cfg.contrast_factor);
    meta.black_spots = int(rng.uniform_int(int64_t(std::floor(hw * cfg.black_spots_per_page.lo)),
                                           int64_t(std::floor(hw * cfg.black_spots_per_page.hi))));
    meta.white_patches =
        int(rng.uniform_int(int64_t(std::floor(hw * cfg.white_patches_per_page.lo)),
                            int64_t(std::floor(hw * cfg.white_patches_per_page.hi))));
    meta.line_artifacts = sample_int(rng, cfg.line_artifacts);
    meta.dilation = sample_int(rng, cfg.dilation_iterations);
    meta.erosion = sample_int(rng, cfg.erosion_iterations);

    std::vector<std::string> order = {"noise",         "rescale",  "blur",
                                      "background",    "stains",   "black_spots",
                                      "white_patches", "line_artifacts", "contrast",
                                      "dilate",        "erode"};
    rng.shuffle(order);

    GrayImage out = img;
    for (const std::string& op : order) {
        if (op == "noise") out = apply_noise(out, rng, meta.noise_amplitude);
        else if (op == "rescale") out = apply_rescale(out, meta.scale);
        else if (op == "blur") out = gaussian_blur(out, meta.blur_sigma);
        else if (op == "background") out = apply_background(out, rng, meta.background);
        else if (op == "stains") out = apply_stains(out, rng, meta.stains, meta.stain_alpha);
        else if (op == "black_spots") out = apply_black_spots(out, rng, meta.black_spots);
        else if (op == "white_patches")
            out = apply_white_patches(out, rng, meta.white_patches, cfg.white_patch_size);
        else if (op == "line_artifacts") out = apply_lines(out, rng, meta.line_artifacts);
        else if (op == "contrast") out = apply_contrast(out, meta.contrast);
        else if (op == "dilate") out = dilate3x3(out, meta.dilation);
        else if (op == "erode") out = erode3x3(out, meta.erosion);
    }
    meta.op_order = order;

    meta.binarized = rng.bernoulli(cfg.binarize_probability);
    if (meta.binarized) {
        out = otsu_binarize(out);
        meta.op_order.push_back("binarize");
    }

    if (meta_out) *meta_out = std::move(meta);
    return out;
}

} // namespace prep::synth
