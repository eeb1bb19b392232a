#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "osteo/image.hpp"

namespace osteo::imaging {

using Histogram = std::array<std::uint64_t, 256>;

/// 256-bin histogram over GrayImage::bin_of.
Histogram histogram256(const GrayImage& img);

struct OtsuResult {
  int threshold_bin = 0;    // class 0 = bins <= threshold_bin
  double threshold = 0.0;   // threshold_bin / 255
  BinaryMask mask;          // pixels whose bin exceeds threshold_bin
};

/// Two-class Otsu over the 256-bin histogram. Ties go to the lowest bin.
/// Throws DegenerateHistogram on a single occupied bin.
OtsuResult otsu_threshold(const GrayImage& img);

struct MultiOtsuResult {
  std::vector<int> threshold_bins;  // ascending, classes - 1 cut points
  std::vector<double> thresholds;   // threshold_bins / 255
  ClassMap class_map;
};

/// Exhaustive multi-level Otsu for classes in {2, 3, 4}. Cut points are the
/// lexicographically lowest maximizer of the between-class variance with
/// every class non-empty.
MultiOtsuResult multi_otsu(const GrayImage& img, int classes);

/// Cut-point search on a bare histogram; exposed for reuse by the two
/// image-level entry points.
std::vector<int> otsu_cut_points(const Histogram& hist, int classes);

}  // namespace osteo::imaging
