#include "osteo/pipeline/mri.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "osteo/error.hpp"
#include "osteo/imaging/morphology.hpp"
#include "osteo/imaging/threshold.hpp"

namespace osteo::mri {

namespace {

template <class Fn>
auto run_step(const char* step, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw e.at_step(step);
  }
}

// Applies the multi-Otsu class prior; returns the refined image and the
// number of pixels whose intensity was replaced.
std::pair<GrayImage, std::size_t> refine_with_prior(const GrayImage& img, const ClassMap& classes, int radius) {
  const auto se = StructuringElement::disk(radius);
  const auto n_classes = static_cast<std::size_t>(classes.classes);
  std::vector<BinaryMask> refined;
  std::vector<double> class_mean(n_classes, 0.0);
  std::vector<double> class_n(n_classes, 0.0);
  for (std::size_t c = 0; c < n_classes; ++c) {
    const BinaryMask raw = classes.mask_of(static_cast<int>(c));
    refined.push_back(imaging::morph_close(imaging::morph_open(raw, se), se));
  }
  for (std::size_t i = 0; i < img.size(); ++i) {
    class_mean[classes.classes_of[i]] += img[i];
    class_n[classes.classes_of[i]] += 1.0;
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    class_mean[c] = class_n[c] > 0.0 ? class_mean[c] / class_n[c] : 0.0;
  }

  constexpr std::uint8_t kUnclaimed = 255;
  auto nearest_mean = [&](double v, const auto& candidate) {
    std::uint8_t pick = kUnclaimed;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n_classes; ++c) {
      if (candidate(c)) {
        const double d = std::fabs(v - class_mean[c]);
        if (d < best) {
          best = d;
          pick = static_cast<std::uint8_t>(c);
        }
      }
    }
    return pick;
  };

  std::vector<std::uint8_t> target(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const std::uint8_t own = classes.classes_of[i];
    target[i] = refined[own][i] ? own : nearest_mean(img[i], [&](std::size_t c) { return refined[c][i]; });
  }

  // Pixels no refined mask claims (thin rims between two classes) take the
  // class of the nearest claimed pixel, growing one 8-connected ring at a
  // time; several classes meeting at once are split by nearest mean.
  const int w = img.width();
  const int h = img.height();
  std::vector<std::size_t> frontier;
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (target[i] == kUnclaimed) {
      frontier.push_back(i);
    }
  }
  while (!frontier.empty()) {
    std::vector<std::pair<std::size_t, std::uint8_t>> ring;
    std::vector<std::size_t> rest;
    for (const std::size_t i : frontier) {
      const int x = static_cast<int>(i % static_cast<std::size_t>(w));
      const int y = static_cast<int>(i / static_cast<std::size_t>(w));
      std::vector<bool> seen(n_classes, false);
      bool any = false;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx;
          const int ny = y + dy;
          if ((dx || dy) && nx >= 0 && ny >= 0 && nx < w && ny < h) {
            const std::uint8_t t = target[static_cast<std::size_t>(ny) * static_cast<std::size_t>(w) +
                                          static_cast<std::size_t>(nx)];
            if (t != kUnclaimed) {
              seen[t] = true;
              any = true;
            }
          }
        }
      }
      if (any) {
        ring.emplace_back(i, nearest_mean(img[i], [&](std::size_t c) { return seen[c]; }));
      } else {
        rest.push_back(i);
      }
    }
    if (ring.empty()) {
      // Nothing survived refinement anywhere; keep the raw classes.
      for (const std::size_t i : rest) {
        target[i] = classes.classes_of[i];
      }
      break;
    }
    for (const auto& [i, t] : ring) {
      target[i] = t;
    }
    frontier = std::move(rest);
  }

  // Replacement intensity: mean over pixels that stayed in their class.
  std::vector<double> stable_sum(n_classes, 0.0);
  std::vector<double> stable_n(n_classes, 0.0);
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (target[i] == classes.classes_of[i]) {
      stable_sum[target[i]] += img[i];
      stable_n[target[i]] += 1.0;
    }
  }
  std::vector<double> px(img.pixels().begin(), img.pixels().end());
  std::size_t moved = 0;
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (target[i] != classes.classes_of[i]) {
      const std::size_t c = target[i];
      px[i] = stable_n[c] > 0.0 ? stable_sum[c] / stable_n[c] : class_mean[c];
      ++moved;
    }
  }
  return {GrayImage(img.width(), img.height(), std::move(px)), moved};
}

std::size_t largest_component(const std::vector<std::uint8_t>& labels, int width, int height, std::uint8_t label) {
  std::vector<std::uint8_t> seen(labels.size(), 0);
  std::vector<std::size_t> stack;
  std::size_t best = 0;
  for (std::size_t start = 0; start < labels.size(); ++start) {
    if (labels[start] != label || seen[start]) {
      continue;
    }
    std::size_t size = 0;
    stack.push_back(start);
    seen[start] = 1;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      ++size;
      const int x = static_cast<int>(i % static_cast<std::size_t>(width));
      const int y = static_cast<int>(i / static_cast<std::size_t>(width));
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx;
          const int ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= width || ny >= height) {
            continue;
          }
          const std::size_t j = static_cast<std::size_t>(ny) * static_cast<std::size_t>(width) + static_cast<std::size_t>(nx);
          if (labels[j] == label && !seen[j]) {
            seen[j] = 1;
            stack.push_back(j);
          }
        }
      }
    }
    best = std::max(best, size);
  }
  return best;
}

// Cluster rank (0 = darkest) that becomes the tumor label.
std::uint8_t tumor_rank(const imaging::KmeansResult& km, TumorRule rule, int width, int height) {
  const auto k = static_cast<std::uint8_t>(km.k);
  switch (rule) {
    case TumorRule::Brightest:
      return static_cast<std::uint8_t>(k - 1);
    case TumorRule::Darkest:
      return 1;
    case TumorRule::LargestComponent: {
      std::uint8_t best = static_cast<std::uint8_t>(k - 1);
      std::size_t best_size = 0;
      for (std::uint8_t r = static_cast<std::uint8_t>(k - 1); r >= 1; --r) {
        const std::size_t s = largest_component(km.labels, width, height, r);
        if (s > best_size) {
          best_size = s;
          best = r;
        }
      }
      return best;
    }
  }
  return static_cast<std::uint8_t>(k - 1);
}

}  // namespace

void MriConfig::validate() const {
  require(std::isfinite(sharpen.amount) && sharpen.amount >= 0.0, ErrorCode::InvalidParameter,
          "sharpen.amount must be >= 0");
  require(std::isfinite(sharpen.sigma) && sharpen.sigma > 0.0, ErrorCode::InvalidParameter,
          "sharpen.sigma must be > 0");
  require(std::isfinite(gamma) && gamma > 0.0, ErrorCode::InvalidParameter, "gamma must be > 0");
  require(otsu_classes == 3 || otsu_classes == 4, ErrorCode::InvalidParameter, "otsu_classes must be 3 or 4");
  require(morph_radius >= 1, ErrorCode::InvalidParameter, "morph_radius must be >= 1");
  require(kmeans.k >= 2 && kmeans.k <= 255, ErrorCode::InvalidParameter, "kmeans.k must be in [2,255]");
  require(kmeans.restarts >= 1, ErrorCode::InvalidParameter, "kmeans.restarts must be >= 1");
}

MriSegmentation segment_mri(const GrayImage& img, const MriConfig& cfg) {
  run_step("config", [&] {
    cfg.validate();
    return 0;
  });
  run_step("input", [&] {
    const auto stats = imaging::intensity_stats(img);
    require(stats.max > stats.min, ErrorCode::DegenerateImage, "image is constant");
    return 0;
  });
  // An input with fewer tissue levels than clusters cannot be split however
  // the preprocessing reshapes it, so the clustering precondition is checked
  // on the source intensities.
  run_step("kmeans", [&] {
    const std::size_t distinct = imaging::distinct_intensities(img);
    require(distinct >= static_cast<std::size_t>(cfg.kmeans.k), ErrorCode::DegenerateKmeans,
            "image has " + std::to_string(distinct) + " distinct intensities, fewer than k=" +
                std::to_string(cfg.kmeans.k));
    return 0;
  });

  const GrayImage sharp = run_step("sharpen", [&] { return imaging::sharpen(img, cfg.sharpen); });
  const GrayImage balanced = run_step("gamma", [&] { return imaging::gamma_correct(sharp, cfg.gamma); });
  const auto prior = run_step("multi_otsu", [&] { return imaging::multi_otsu(balanced, cfg.otsu_classes); });
  const auto [refined, moved] =
      run_step("morphology", [&] { return refine_with_prior(balanced, prior.class_map, cfg.morph_radius); });
  const auto km = run_step("kmeans", [&] { return imaging::kmeans_intensity(refined, cfg.kmeans); });

  const std::uint8_t tumor = tumor_rank(km, cfg.tumor_rule, img.width(), img.height());
  std::vector<std::uint8_t> labels(img.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::uint8_t r = km.labels[i];
    labels[i] = r == 0 ? static_cast<std::uint8_t>(Tissue::Background)
                       : (r == tumor ? static_cast<std::uint8_t>(Tissue::Tumor)
                                     : static_cast<std::uint8_t>(Tissue::Neighbor));
  }
  LabelMask label_mask(img.width(), img.height(), std::move(labels));
  BinaryMask tumor_mask = label_mask.mask_of(Tissue::Tumor);
  BinaryMask neighbor_mask = label_mask.mask_of(Tissue::Neighbor);
  const bool degenerate = label_mask.degenerate();
  return MriSegmentation{std::move(label_mask),
                         std::move(tumor_mask),
                         std::move(neighbor_mask),
                         km.centroids,
                         prior.thresholds,
                         cfg,
                         MriQuality{degenerate, km.iterations, moved}};
}

QualityVerdict quality_filter(const GrayImage& img, const QualityThresholds& thresholds) {
  QualityVerdict v;
  const auto stats = imaging::intensity_stats(img);
  std::size_t saturated = 0;
  for (double p : img.pixels()) {
    saturated += p >= thresholds.saturation_level ? 1 : 0;
  }
  v.saturated_fraction = static_cast<double>(saturated) / static_cast<double>(img.size());
  v.stddev = stats.stddev;
  if (v.saturated_fraction > thresholds.max_saturated_fraction) {
    v.reasons.emplace_back("high-saturation");
  }
  if (v.stddev < thresholds.min_stddev) {
    v.reasons.emplace_back("low-contrast");
  }
  v.accepted = v.reasons.empty();
  return v;
}

}  // namespace osteo::mri
