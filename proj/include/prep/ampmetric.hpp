#pragma once
// Aggregated Masked PSNR. Per-pixel PSNR is evaluated on the union of the
// Otsu text masks of ground truth and prediction (zero error pixels score
// 100 dB), accumulated position-wise across a test set, averaged per
// position, then averaged over the defined positions.

#include "prep/image.hpp"

#include <vector>

namespace prep::amp {

enum class Region { Full, Central192, Central128 };

Region region_from_string(const std::string& s); // "full" | "192" | "128"
std::string to_string(Region r);
int region_crop(Region r); // pixels removed per side: 0 / 32 / 64

struct MaskedPsnrMap {
    int width = 0, height = 0;
    std::vector<uint8_t> mask; // 1 where the pixel is in the union mask
    std::vector<double> psnr;  // meaningful only where mask != 0
};

MaskedPsnrMap masked_psnr_map(const GrayImage& gt, const GrayImage& pred);

class PsnrAccumulator {
public:
    explicit PsnrAccumulator(int width = 256, int height = 256);

    void accumulate(const MaskedPsnrMap& m);
    void accumulate(const GrayImage& gt, const GrayImage& pred);

    // Elementwise addition; partial accumulators built in parallel merge to
    // the same result in any order.
    PsnrAccumulator& merge(const PsnrAccumulator& other);

    int width() const { return width_; }
    int height() const { return height_; }
    const std::vector<double>& sum_map() const { return sum_; }
    const std::vector<uint32_t>& count_map() const { return count_; }

    struct Result {
        double amp = 0.0;              // dB, in [0, 100]
        int width = 0, height = 0;     // region dimensions
        std::vector<double> mean_map;  // per-position mean PSNR (0 where undefined)
        std::vector<uint8_t> defined;  // 1 where count > 0
        uint64_t defined_pixels = 0;
    };
    // Throws if no position in the region was ever masked.
    Result finalize(Region region) const;

private:
    int width_, height_;
    std::vector<double> sum_;
    std::vector<uint32_t> count_;
};

// Mean map rendered for reports: 0..100 dB maps to 0..255; undefined
// positions render black.
GrayImage heat_image(const PsnrAccumulator::Result& result);

} // namespace prep::amp
