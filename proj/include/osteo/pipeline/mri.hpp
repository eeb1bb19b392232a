#pragma once

#include <string>
#include <vector>

#include "osteo/image.hpp"
#include "osteo/imaging/filters.hpp"
#include "osteo/imaging/kmeans.hpp"

namespace osteo::mri {

/// Which K-means cluster is called tumor. The darkest cluster is always
/// background.
enum class TumorRule {
  Brightest,         // brightest cluster; fluid-sensitive sequences
  Darkest,           // darkest non-background cluster
  LargestComponent,  // non-background cluster owning the largest 8-connected blob
};

struct MriConfig {
  imaging::SharpenParams sharpen;
  double gamma = 1.2;
  int otsu_classes = 3;
  int morph_radius = 2;
  imaging::KmeansParams kmeans;  // k = 3 by default
  TumorRule tumor_rule = TumorRule::Brightest;

  void validate() const;
};

struct MriQuality {
  bool labels_degenerate = false;  // only one tissue label present
  int kmeans_iterations = 0;
  std::size_t refined_pixels = 0;  // pixels whose intensity the prior replaced
};

struct MriSegmentation {
  LabelMask labels;
  BinaryMask tumor_mask;
  BinaryMask neighbor_mask;
  std::vector<double> centroids;        // ascending
  std::vector<double> otsu_thresholds;  // the prior's cut points
  MriConfig config;
  MriQuality quality;
};

/// Sharpen, gamma, multi-Otsu prior with per-class open+close, K-means on
/// the refined image, then tissue labelling by `tumor_rule`.
///
/// The prior works as follows: every Otsu class mask is opened then closed;
/// a pixel keeps its class when that class's refined mask still claims it,
/// otherwise it moves to a claiming class (nearest class mean when several
/// claim it). Pixels no refined mask claims take the class of the nearest
/// claimed pixel. Moved pixels take the mean intensity of their new class's
/// unmoved pixels before clustering.
MriSegmentation segment_mri(const GrayImage& img, const MriConfig& cfg = {});

struct QualityThresholds {
  double saturation_level = 0.98;
  double max_saturated_fraction = 0.20;
  double min_stddev = 0.05;
};

struct QualityVerdict {
  bool accepted = true;
  std::vector<std::string> reasons;  // "high-saturation", "low-contrast"
  double saturated_fraction = 0.0;
  double stddev = 0.0;
};

QualityVerdict quality_filter(const GrayImage& img, const QualityThresholds& thresholds = {});

}  // namespace osteo::mri
