#pragma once
// Multi-directional patch restoration: 256x256 patches on a stride of
// patch_size - 2*trim, four corner-to-corner scan orders, retained-center
// write-back, and pixel-wise median/mean fusion of the directional passes.

#include "prep/image.hpp"

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace prep::patch {

enum class ScanDirection { TopLeftToBottomRight, TopRightToBottomLeft,
                           BottomLeftToTopRight, BottomRightToTopLeft };

constexpr std::array<ScanDirection, 4> kAllDirections = {
    ScanDirection::TopLeftToBottomRight, ScanDirection::TopRightToBottomLeft,
    ScanDirection::BottomLeftToTopRight, ScanDirection::BottomRightToTopLeft};

std::string to_string(ScanDirection d);
ScanDirection direction_from_string(const std::string& s);

// Geometry of one directional pass. Every edge carries `trim` px of
// replicate padding; the two edges opposite the scan origin additionally
// carry the alignment padding that makes the stride divide the padded
// span. Retained centers (patches shrunk by trim per side) then tile the
// padded interior and cover the original image exactly once.
struct PatchPlan {
    int patch_size = 256;
    int trim = 64;
    int stride = 128;
    ScanDirection direction = ScanDirection::TopLeftToBottomRight;
    int image_width = 0, image_height = 0;
    int padded_width = 0, padded_height = 0;
    int pad_top = 0, pad_left = 0, pad_bottom = 0, pad_right = 0;
    int leading_pad = 0;                   // trim, on the scan-origin edges
    int trailing_pad_x = 0, trailing_pad_y = 0; // trim + alignment, opposite edges
    int rows = 0, cols = 0;
    std::vector<Rect> patches; // padded coordinates, enumerated in scan order
};

PatchPlan plan_patches(int width, int height, ScanDirection direction, int trim);

struct RestorerHandle {
    enum class Kind { Identity, OtsuBinarize, MedianDenoise3x3, ExternalCommand };
    Kind kind = Kind::Identity;
    std::string command_template; // placeholders {input_dir} {output_dir} {index_file}
    bool deterministic = true;

    static RestorerHandle identity() { return {}; }
    static RestorerHandle otsu_binarize() { return {Kind::OtsuBinarize, "", true}; }
    static RestorerHandle median_denoise() { return {Kind::MedianDenoise3x3, "", true}; }
    static RestorerHandle external(std::string tmpl, bool deterministic = true) {
        return {Kind::ExternalCommand, std::move(tmpl), deterministic};
    }
    // CLI syntax: identity | otsu | median3 | exec:<template>
    static RestorerHandle parse(const std::string& s);
};

// Raised when a restorer returns a malformed patch or the external command
// fails; carries the offending patch index (-1 for whole-batch failures).
struct RestoreError : std::runtime_error {
    RestoreError(const std::string& what, int patch)
        : std::runtime_error(what), patch_index(patch) {}
    int patch_index;
};

// One directional pass: pad, restore every patch, keep each patch's central
// region, crop back. Output dimensions equal the input's.
GrayImage restore_pass(const GrayImage& img, const PatchPlan& plan,
                       const RestorerHandle& restorer, int workers = 1);

enum class FuseMethod { Median, Mean };

// Pixel-wise fusion of exactly four passes. Median of four is the mean of
// the two middle order statistics; both methods round half away from zero.
GrayImage fuse(const std::vector<GrayImage>& passes, FuseMethod method);

struct RestoreMode {
    bool multi = true;
    ScanDirection direction = ScanDirection::TopLeftToBottomRight; // single mode
    FuseMethod fusion = FuseMethod::Median;                        // multi mode
};

struct RestoreReport {
    std::vector<uint64_t> pass_checksums; // per direction, multi mode only
};

GrayImage restore_image(const GrayImage& img, const RestorerHandle& restorer,
                        const RestoreMode& mode, int trim, int workers = 1,
                        RestoreReport* report = nullptr);

// FNV-1a over dimensions and pixel bytes; used for pass bookkeeping.
uint64_t image_checksum(const GrayImage& img);

} // namespace prep::patch
