#pragma once

#include "prep/image.hpp"

namespace prep {

// Separable Gaussian blur; sigma <= 0 returns the input unchanged.
// Kernel half-width is ceil(3*sigma); borders replicate.
GrayImage gaussian_blur(const GrayImage& img, double sigma);

// Grayscale 3x3 morphology with replicate borders, applied `iterations`
// times. Dilation takes the neighborhood max (bright grows), erosion the
// min (dark grows) — the usual raster convention, so on a document page
// erosion thickens ink and dilation thins it.
GrayImage dilate3x3(const GrayImage& img, int iterations);
GrayImage erode3x3(const GrayImage& img, int iterations);

// 3x3 median filter with replicate borders.
GrayImage median3x3(const GrayImage& img);

} // namespace prep
