#pragma once

#include <vector>

#include "osteo/image.hpp"

namespace osteo::imaging {

/// Normalized 1-D Gaussian taps on [-ceil(3σ), ceil(3σ)].
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian blur, edge-replicated borders.
GrayImage gaussian_blur(const GrayImage& img, double sigma);

/// v -> v^gamma.
GrayImage gamma_correct(const GrayImage& img, double gamma);

struct ClaheParams {
  double clip_limit = 2.0;  // relative to the uniform bin height tile_pixels / 256
  int tiles_x = 8;
  int tiles_y = 8;
};

/// Contrast-limited adaptive histogram equalization on 256 bins.
///
/// Each tile's histogram is clipped at clip_limit * tile_pixels / 256 and the
/// clipped mass is spread uniformly over all bins, repeating until less than
/// one count of excess remains. A tile's mapping is cdf(bin) / tile_pixels,
/// except that a tile whose raw histogram occupies a single bin maps to
/// identity. Pixel outputs blend the four nearest tile-center mappings
/// bilinearly.
GrayImage clahe(const GrayImage& img, const ClaheParams& params = {});

/// Plain global histogram equalization with the same mapping convention as
/// a single CLAHE tile without clipping.
GrayImage equalize_histogram(const GrayImage& img);

struct StretchParams {
  double p_low = 2.0;
  double p_high = 98.0;
};

struct StretchResult {
  GrayImage image;
  double low_value = 0.0;
  double high_value = 0.0;
  bool degenerate = false;  // the two percentile values coincided
};

/// Linear-interpolated percentile (0..100) of the pixel intensities.
double percentile(const GrayImage& img, double p);

StretchResult contrast_stretch(const GrayImage& img, const StretchParams& params = {});

struct SharpenParams {
  double amount = 1.0;
  double sigma = 1.0;
};

/// Unsharp masking: clamp(img + amount * (img - blur(img, sigma))).
GrayImage sharpen(const GrayImage& img, const SharpenParams& params = {});

struct IntensityStats {
  double mean = 0.0;
  double stddev = 0.0;  // population
  double min = 0.0;
  double max = 0.0;
};

IntensityStats intensity_stats(const GrayImage& img);

/// Number of distinct intensity values.
std::size_t distinct_intensities(const GrayImage& img);

}  // namespace osteo::imaging
