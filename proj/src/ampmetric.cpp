#include "prep/ampmetric.hpp"

#include <cmath>
#include <stdexcept>

namespace prep::amp {

Region region_from_string(const std::string& s) {
    if (s == "full") return Region::Full;
    if (s == "192" || s == "central-192") return Region::Central192;
    if (s == "128" || s == "central-128") return Region::Central128;
    throw std::invalid_argument("unknown AMP region: " + s);
}

std::string to_string(Region r) {
    switch (r) {
    case Region::Full: return "full";
    case Region::Central192: return "central-192";
    case Region::Central128: return "central-128";
    }
    return "?";
}

int region_crop(Region r) {
    switch (r) {
    case Region::Full: return 0;
    case Region::Central192: return 32;
    case Region::Central128: return 64;
    }
    return 0;
}

MaskedPsnrMap masked_psnr_map(const GrayImage& gt, const GrayImage& pred) {
    if (!gt.same_size(pred))
        throw std::invalid_argument("masked_psnr_map: dimension mismatch");

    const int t_gt = otsu_threshold(gt);
    const int t_pred = otsu_threshold(pred);

    MaskedPsnrMap m;
    m.width = gt.width();
    m.height = gt.height();
    m.mask.assign(gt.pixel_count(), 0);
    m.psnr.assign(gt.pixel_count(), 0.0);

    const auto& a = gt.data();
    const auto& b = pred.data();
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i] >= t_gt && b[i] >= t_pred) continue; // neither mask is foreground
        m.mask[i] = 1;
        int d = int(a[i]) - int(b[i]);
        int e = d * d;
        m.psnr[i] = e == 0 ? 100.0 : 10.0 * std::log10(255.0 * 255.0 / double(e));
    }
    return m;
}

PsnrAccumulator::PsnrAccumulator(int width, int height) : width_(width), height_(height) {
    if (width < 1 || height < 1)
        throw std::invalid_argument("PsnrAccumulator: dimensions must be >= 1");
    sum_.assign(size_t(width) * height, 0.0);
    count_.assign(size_t(width) * height, 0);
}

void PsnrAccumulator::accumulate(const MaskedPsnrMap& m) {
    if (m.width != width_ || m.height != height_)
        throw std::invalid_argument("PsnrAccumulator: map dimensions differ from accumulator");
    for (size_t i = 0; i < m.mask.size(); ++i) {
        if (!m.mask[i]) continue;
        sum_[i] += m.psnr[i];
        ++count_[i];
    }
}

void PsnrAccumulator::accumulate(const GrayImage& gt, const GrayImage& pred) {
    accumulate(masked_psnr_map(gt, pred));
}

PsnrAccumulator& PsnrAccumulator::merge(const PsnrAccumulator& other) {
    if (other.width_ != width_ || other.height_ != height_)
        throw std::invalid_argument("PsnrAccumulator: merge dimension mismatch");
    for (size_t i = 0; i < sum_.size(); ++i) {
        sum_[i] += other.sum_[i];
        count_[i] += other.count_[i];
    }
    return *this;
}

PsnrAccumulator::Result PsnrAccumulator::finalize(Region region) const {
    const int c = region_crop(region);
    if (width_ <= 2 * c || height_ <= 2 * c)
        throw std::invalid_argument("PsnrAccumulator: region larger than accumulator");

    Result res;
    res.width = width_ - 2 * c;
    res.height = height_ - 2 * c;
    res.mean_map.assign(size_t(res.width) * res.height, 0.0);
    res.defined.assign(size_t(res.width) * res.height, 0);

    double total = 0.0;
    for (int y = 0; y < res.height; ++y) {
        for (int x = 0; x < res.width; ++x) {
            size_t src = size_t(y + c) * width_ + size_t(x + c);
            size_t dst = size_t(y) * res.width + size_t(x);
            if (count_[src] == 0) continue;
            double mean = sum_[src] / double(count_[src]);
            res.mean_map[dst] = mean;
            res.defined[dst] = 1;
            ++res.defined_pixels;
            total += mean;
        }
    }
    if (res.defined_pixels == 0)
        throw std::runtime_error("PsnrAccumulator: no masked pixel in region " +
                                 to_string(region));
    res.amp = total / double(res.defined_pixels);
    return res;
}

GrayImage heat_image(const PsnrAccumulator::Result& result) {
    GrayImage img(result.width, result.height);
    auto& data = img.data();
    for (size_t i = 0; i < data.size(); ++i)
        data[i] = result.defined[i] ? quantize(result.mean_map[i] * 255.0 / 100.0) : 0;
    return img;
}

} // namespace prep::amp
