#pragma once
// 8-bit grayscale raster and the geometric/metric primitives shared by the
// whole toolkit. 0 is black ink, 255 is white page. All operations that
// produce an image quantize back to 8 bits with round-half-away-from-zero.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace prep {

struct Rect {
    int x0 = 0;
    int y0 = 0;
    int width = 0;
    int height = 0;
};

class GrayImage {
public:
    GrayImage() = default;

    GrayImage(int width, int height, uint8_t fill = 0)
        : width_(width), height_(height) {
        if (width < 1 || height < 1)
            throw std::invalid_argument("GrayImage: dimensions must be >= 1");
        data_.assign(size_t(width) * size_t(height), fill);
    }

    GrayImage(int width, int height, std::vector<uint8_t> data)
        : width_(width), height_(height), data_(std::move(data)) {
        if (width < 1 || height < 1)
            throw std::invalid_argument("GrayImage: dimensions must be >= 1");
        if (data_.size() != size_t(width) * size_t(height))
            throw std::invalid_argument("GrayImage: data length != width*height");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }
    size_t pixel_count() const { return data_.size(); }

    uint8_t at(int x, int y) const { return data_[size_t(y) * width_ + x]; }
    uint8_t& at(int x, int y) { return data_[size_t(y) * width_ + x]; }

    const uint8_t* row(int y) const { return data_.data() + size_t(y) * width_; }
    uint8_t* row(int y) { return data_.data() + size_t(y) * width_; }

    const std::vector<uint8_t>& data() const { return data_; }
    std::vector<uint8_t>& data() { return data_; }

    bool same_size(const GrayImage& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

    bool operator==(const GrayImage& other) const {
        return width_ == other.width_ && height_ == other.height_ && data_ == other.data_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<uint8_t> data_;
};

// Round half away from zero, clamp to [0,255].
inline uint8_t quantize(double v) {
    double r = v < 0.0 ? std::ceil(v - 0.5) : std::floor(v + 0.5);
    if (r < 0.0) return 0;
    if (r > 255.0) return 255;
    return uint8_t(r);
}

// Otsu threshold t maximizing between-class variance of the split
// {intensity <= t} vs {intensity > t}. Foreground ("text") everywhere in
// this toolkit means intensity strictly below t. Ties are broken to the
// midpoint of the maximizing plateau, rounded down. A single-intensity
// image returns that intensity (empty foreground under the strict rule).
int otsu_threshold(const GrayImage& img);
int otsu_threshold(const uint64_t histogram[256], uint64_t total);

// Binarize at the image's own Otsu threshold: <t -> 0, else 255.
GrayImage otsu_binarize(const GrayImage& img);

// 10*log10(255^2 / MSE); +infinity when the images are identical.
double psnr(const GrayImage& a, const GrayImage& b);

GrayImage pad_replicate(const GrayImage& img, int top, int left, int bottom, int right);

GrayImage crop(const GrayImage& img, const Rect& r);

// Pixel-center bilinear resampling; same-size input is returned unchanged.
GrayImage resize_bilinear(const GrayImage& img, int new_width, int new_height);

// Aspect-preserving resize to a target width.
GrayImage resize_to_width(const GrayImage& img, int new_width);

} // namespace prep
