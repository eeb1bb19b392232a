#pragma once

#include <cstdint>
#include <vector>

#include "osteo/image.hpp"

namespace osteo::imaging {

struct KmeansParams {
  int k = 3;
  std::uint64_t seed = 0;
  int restarts = 10;       // independent k-means++ seedings; lowest SSE wins
  int max_iter = 300;
  double min_shift = 1e-4;
};

struct KmeansResult {
  int k = 0;
  std::vector<std::uint8_t> labels;  // 0 = darkest cluster
  std::vector<double> centroids;     // ascending
  std::vector<std::size_t> sizes;
  double sse = 0.0;                  // within-cluster sum of squares
  int iterations = 0;                // Lloyd iterations of the winning run
};

/// 1-D K-means on pixel intensity.
///
/// Seeding is k-means++ from a std::mt19937_64 stream seeded with `seed`; Lloyd
/// iterations stop once every centroid moves less than `min_shift` and the
/// assignment is stable, or after `max_iter`. Labels are renumbered by
/// ascending centroid so the output depends only on the partition found.
/// Throws DegenerateKmeans when the image has fewer than k distinct values.
KmeansResult kmeans_intensity(const GrayImage& img, const KmeansParams& params);

/// kmeans_intensity with k in {2, 3}, returned as a label raster (label =
/// cluster rank by intensity).
LabelMask kmeans_segment(const GrayImage& img, int k, std::uint64_t seed);

/// Within-cluster sum of squared deviations for an arbitrary labelling.
double within_cluster_sse(const GrayImage& img, const std::vector<std::uint8_t>& labels, int k);

}  // namespace osteo::imaging
