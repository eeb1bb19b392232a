#include "osteo/imaging/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "osteo/error.hpp"

namespace osteo::imaging {

namespace {

// Distinct intensities with multiplicities; clustering runs on these.
struct WeightedValues {
  std::vector<double> value;
  std::vector<double> weight;
  double total = 0.0;
};

WeightedValues compress(const GrayImage& img) {
  std::vector<double> sorted(img.pixels().begin(), img.pixels().end());
  std::sort(sorted.begin(), sorted.end());
  WeightedValues wv;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) {
      ++j;
    }
    wv.value.push_back(sorted[i]);
    wv.weight.push_back(static_cast<double>(j - i));
    i = j;
  }
  wv.total = static_cast<double>(sorted.size());
  return wv;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Index of the weighted sample whose cumulative weight first exceeds r.
std::size_t pick(const std::vector<double>& weights, double r) {
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (r < acc) {
      return i;
    }
  }
  // r fell on the cumulative total through rounding; take the last positive weight.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) {
      return i;
    }
  }
  return 0;
}

std::vector<double> seed_plus_plus(const WeightedValues& wv, int k, std::mt19937_64& rng) {
  std::vector<double> centers;
  centers.push_back(wv.value[pick(wv.weight, uniform01(rng) * wv.total)]);
  std::vector<double> d2w(wv.value.size());
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < wv.value.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (double c : centers) {
        best = std::min(best, (wv.value[i] - c) * (wv.value[i] - c));
      }
      d2w[i] = best * wv.weight[i];
      total += d2w[i];
    }
    centers.push_back(wv.value[pick(d2w, uniform01(rng) * total)]);
  }
  return centers;
}

std::size_t nearest(const std::vector<double>& centers, double v) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double d = (v - centers[c]) * (v - centers[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

struct Run {
  std::vector<double> centers;
  std::vector<std::size_t> assignment;  // per distinct value
  double sse = 0.0;
  int iterations = 0;
};

Run lloyd(const WeightedValues& wv, std::vector<double> centers, const KmeansParams& p) {
  Run run;
  const std::size_t k = centers.size();
  std::vector<std::size_t> assign(wv.value.size(), k);
  for (int iter = 0; iter < p.max_iter; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < wv.value.size(); ++i) {
      const std::size_t c = nearest(centers, wv.value[i]);
      changed |= c != assign[i];
      assign[i] = c;
    }
    std::vector<double> sum(k, 0.0);
    std::vector<double> weight(k, 0.0);
    for (std::size_t i = 0; i < wv.value.size(); ++i) {
      sum[assign[i]] += wv.value[i] * wv.weight[i];
      weight[assign[i]] += wv.weight[i];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (weight[c] > 0.0) {
        const double next = sum[c] / weight[c];
        shift = std::max(shift, std::fabs(next - centers[c]));
        centers[c] = next;
      }
    }
    run.iterations = iter + 1;
    if (!changed && shift < p.min_shift) {
      break;
    }
  }
  run.sse = 0.0;
  for (std::size_t i = 0; i < wv.value.size(); ++i) {
    const double d = wv.value[i] - centers[assign[i]];
    run.sse += wv.weight[i] * d * d;
  }
  run.centers = std::move(centers);
  run.assignment = std::move(assign);
  return run;
}

}  // namespace

KmeansResult kmeans_intensity(const GrayImage& img, const KmeansParams& params) {
  require(params.k >= 2 && params.k <= 255, ErrorCode::InvalidParameter,
          "k-means k must be in [2,255], got " + std::to_string(params.k));
  require(params.restarts >= 1 && params.max_iter >= 1, ErrorCode::InvalidParameter,
          "k-means restarts and max_iter must be >= 1");
  require(params.min_shift >= 0.0, ErrorCode::InvalidParameter, "k-means min_shift must be >= 0");
  const WeightedValues wv = compress(img);
  require(wv.value.size() >= static_cast<std::size_t>(params.k), ErrorCode::DegenerateKmeans,
          "image has " + std::to_string(wv.value.size()) + " distinct intensities, fewer than k=" +
              std::to_string(params.k));

  std::mt19937_64 rng(params.seed);
  Run best;
  for (int r = 0; r < params.restarts; ++r) {
    Run run = lloyd(wv, seed_plus_plus(wv, params.k, rng), params);
    if (r == 0 || run.sse < best.sse) {
      best = std::move(run);
    }
  }

  // Rank clusters by centroid; ties keep the original index order.
  std::vector<std::size_t> order(static_cast<std::size_t>(params.k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return best.centers[a] < best.centers[b]; });
  std::vector<std::uint8_t> rank(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    rank[order[r]] = static_cast<std::uint8_t>(r);
  }

  KmeansResult out;
  out.k = params.k;
  out.iterations = best.iterations;
  out.sse = best.sse;
  for (std::size_t idx : order) {
    out.centroids.push_back(best.centers[idx]);
  }
  out.sizes.assign(order.size(), 0);
  out.labels.resize(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const auto it = std::lower_bound(wv.value.begin(), wv.value.end(), img[i]);
    const auto vi = static_cast<std::size_t>(it - wv.value.begin());
    const std::uint8_t label = rank[best.assignment[vi]];
    out.labels[i] = label;
    ++out.sizes[label];
  }
  return out;
}

LabelMask kmeans_segment(const GrayImage& img, int k, std::uint64_t seed) {
  require(k == 2 || k == 3, ErrorCode::InvalidParameter, "kmeans_segment supports k in {2,3}");
  KmeansParams p;
  p.k = k;
  p.seed = seed;
  auto result = kmeans_intensity(img, p);
  return LabelMask(img.width(), img.height(), std::move(result.labels));
}

double within_cluster_sse(const GrayImage& img, const std::vector<std::uint8_t>& labels, int k) {
  require(labels.size() == img.size(), ErrorCode::DimensionMismatch, "label count differs from pixel count");
  std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
  std::vector<double> n(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    sum[labels[i]] += img[i];
    n[labels[i]] += 1.0;
  }
  double sse = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double mean = sum[labels[i]] / n[labels[i]];
    sse += (img[i] - mean) * (img[i] - mean);
  }
  return sse;
}

}  // namespace osteo::imaging
