#pragma once

#include "prep/image.hpp"

#include <string>

namespace prep {

// Reads any PNG as 8-bit grayscale. Multi-channel inputs are converted with
// the BT.601 luma weights (0.299, 0.587, 0.114) after compositing alpha over
// white; 16-bit channels are scaled to 8. Throws std::runtime_error on
// malformed files.
GrayImage read_png_gray(const std::string& path);

// Writes an 8-bit single-channel PNG. Output bytes are deterministic for a
// given image.
void write_png_gray(const std::string& path, const GrayImage& img);

} // namespace prep
