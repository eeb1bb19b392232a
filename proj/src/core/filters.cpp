#include "osteo/imaging/filters.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "osteo/error.hpp"

namespace osteo::imaging {

namespace {

constexpr int kBins = 256;

using Mapping = std::array<double, kBins>;

// Convolves rows (horizontal == true) or columns with edge replication.
std::vector<double> convolve_1d(std::span<const double> src, int width, int height,
                                const std::vector<double>& kernel, bool horizontal) {
  const int radius = static_cast<int>(kernel.size() / 2);
  std::vector<double> dst(src.size());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int sx = horizontal ? std::clamp(x + k, 0, width - 1) : x;
        const int sy = horizontal ? y : std::clamp(y + k, 0, height - 1);
        acc += kernel[static_cast<std::size_t>(k + radius)] *
               src[static_cast<std::size_t>(sy) * static_cast<std::size_t>(width) + static_cast<std::size_t>(sx)];
      }
      dst[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)] = acc;
    }
  }
  return dst;
}

std::array<double, kBins> histogram_of(const GrayImage& img, int x0, int x1, int y0, int y1) {
  std::array<double, kBins> hist{};
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      hist[static_cast<std::size_t>(GrayImage::bin_of(img.at(x, y)))] += 1.0;
    }
  }
  return hist;
}

Mapping identity_mapping() {
  Mapping m{};
  for (int b = 0; b < kBins; ++b) {
    m[static_cast<std::size_t>(b)] = b / 255.0;
  }
  return m;
}

// Clip at `limit`, spread the excess uniformly and repeat until the excess
// drops below one count or stops shrinking. The residual is spread without
// re-clipping so the histogram mass is preserved.
void clip_histogram(std::array<double, kBins>& hist, double limit) {
  double previous = std::numeric_limits<double>::infinity();
  for (;;) {
    double excess = 0.0;
    for (double& h : hist) {
      if (h > limit) {
        excess += h - limit;
        h = limit;
      }
    }
    const double share = excess / kBins;
    for (double& h : hist) {
      h += share;
    }
    if (excess < 1.0 || excess >= previous) {
      break;
    }
    previous = excess;
  }
}

Mapping tile_mapping(std::array<double, kBins> hist, double clip_limit, bool clip) {
  const double total = std::accumulate(hist.begin(), hist.end(), 0.0);
  const auto occupied = std::count_if(hist.begin(), hist.end(), [](double h) { return h > 0.0; });
  if (occupied <= 1) {
    return identity_mapping();
  }
  if (clip) {
    clip_histogram(hist, clip_limit * total / kBins);
  }
  Mapping m{};
  double cdf = 0.0;
  for (std::size_t b = 0; b < kBins; ++b) {
    cdf += hist[b];
    m[b] = std::clamp(cdf / total, 0.0, 1.0);
  }
  return m;
}

// Tile boundaries: tile i covers [i*n/tiles, (i+1)*n/tiles).
int tile_start(int i, int n, int tiles) {
  return static_cast<int>(static_cast<long long>(i) * n / tiles);
}

}  // namespace

std::vector<double> gaussian_kernel(double sigma) {
  require(std::isfinite(sigma) && sigma > 0.0, ErrorCode::InvalidParameter,
          "gaussian sigma must be > 0, got " + std::to_string(sigma));
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  for (int i = -radius; i <= radius; ++i) {
    k[static_cast<std::size_t>(i + radius)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
  }
  const double sum = std::accumulate(k.begin(), k.end(), 0.0);
  for (double& v : k) {
    v /= sum;
  }
  return k;
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  auto tmp = convolve_1d(img.pixels(), img.width(), img.height(), kernel, true);
  auto out = convolve_1d(tmp, img.width(), img.height(), kernel, false);
  for (double& v : out) {
    v = std::clamp(v, 0.0, 1.0);
  }
  return GrayImage(img.width(), img.height(), std::move(out));
}

GrayImage gamma_correct(const GrayImage& img, double gamma) {
  require(std::isfinite(gamma) && gamma > 0.0, ErrorCode::InvalidParameter,
          "gamma must be > 0, got " + std::to_string(gamma));
  std::vector<double> out(img.size());
  std::transform(img.pixels().begin(), img.pixels().end(), out.begin(),
                 [gamma](double v) { return std::clamp(std::pow(v, gamma), 0.0, 1.0); });
  return GrayImage(img.width(), img.height(), std::move(out));
}

GrayImage clahe(const GrayImage& img, const ClaheParams& params) {
  require(std::isfinite(params.clip_limit) && params.clip_limit > 0.0, ErrorCode::InvalidParameter,
          "clahe clip_limit must be > 0");
  require(params.tiles_x >= 1 && params.tiles_y >= 1, ErrorCode::InvalidParameter, "clahe tile counts must be >= 1");
  const int w = img.width();
  const int h = img.height();
  require(w >= 2 * params.tiles_x && h >= 2 * params.tiles_y, ErrorCode::InvalidParameter,
          "clahe tiles larger than image: " + std::to_string(params.tiles_x) + "x" + std::to_string(params.tiles_y) +
              " tiles need at least 2 px per side on a " + std::to_string(w) + "x" + std::to_string(h) + " image");

  const int tx = params.tiles_x;
  const int ty = params.tiles_y;
  std::vector<Mapping> maps(static_cast<std::size_t>(tx) * static_cast<std::size_t>(ty));
  std::vector<double> cx(static_cast<std::size_t>(tx));
  std::vector<double> cy(static_cast<std::size_t>(ty));
  for (int j = 0; j < ty; ++j) {
    const int y0 = tile_start(j, h, ty);
    const int y1 = tile_start(j + 1, h, ty);
    cy[static_cast<std::size_t>(j)] = 0.5 * (y0 + y1 - 1);
    for (int i = 0; i < tx; ++i) {
      const int x0 = tile_start(i, w, tx);
      const int x1 = tile_start(i + 1, w, tx);
      cx[static_cast<std::size_t>(i)] = 0.5 * (x0 + x1 - 1);
      maps[static_cast<std::size_t>(j * tx + i)] =
          tile_mapping(histogram_of(img, x0, x1, y0, y1), params.clip_limit, true);
    }
  }

  // Locates the pair of tile centers bracketing `p` and the blend weight of
  // the upper one; outside the outermost centers the nearest tile wins.
  auto bracket = [](const std::vector<double>& centers, double p, int& lo, int& hi, double& t) {
    const int n = static_cast<int>(centers.size());
    if (p <= centers.front()) {
      lo = hi = 0;
      t = 0.0;
      return;
    }
    if (p >= centers.back()) {
      lo = hi = n - 1;
      t = 0.0;
      return;
    }
    lo = 0;
    while (lo + 1 < n && centers[static_cast<std::size_t>(lo + 1)] <= p) {
      ++lo;
    }
    hi = lo + 1;
    t = (p - centers[static_cast<std::size_t>(lo)]) /
        (centers[static_cast<std::size_t>(hi)] - centers[static_cast<std::size_t>(lo)]);
  };

  std::vector<double> out(img.size());
  for (int y = 0; y < h; ++y) {
    int j0 = 0;
    int j1 = 0;
    double ty_w = 0.0;
    bracket(cy, y, j0, j1, ty_w);
    for (int x = 0; x < w; ++x) {
      int i0 = 0;
      int i1 = 0;
      double tx_w = 0.0;
      bracket(cx, x, i0, i1, tx_w);
      const auto b = static_cast<std::size_t>(GrayImage::bin_of(img.at(x, y)));
      const double v00 = maps[static_cast<std::size_t>(j0 * tx + i0)][b];
      const double v01 = maps[static_cast<std::size_t>(j0 * tx + i1)][b];
      const double v10 = maps[static_cast<std::size_t>(j1 * tx + i0)][b];
      const double v11 = maps[static_cast<std::size_t>(j1 * tx + i1)][b];
      // a + w (b - a) returns a exactly when the mappings agree, so flat
      // regions stay flat to the last bit.
      const double top = v00 + tx_w * (v01 - v00);
      const double bottom = v10 + tx_w * (v11 - v10);
      out[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] =
          std::clamp(top + ty_w * (bottom - top), 0.0, 1.0);
    }
  }
  return GrayImage(w, h, std::move(out));
}

GrayImage equalize_histogram(const GrayImage& img) {
  const Mapping m = tile_mapping(histogram_of(img, 0, img.width(), 0, img.height()), 0.0, false);
  std::vector<double> out(img.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = m[static_cast<std::size_t>(GrayImage::bin_of(img[i]))];
  }
  return GrayImage(img.width(), img.height(), std::move(out));
}

double percentile(const GrayImage& img, double p) {
  require(p >= 0.0 && p <= 100.0, ErrorCode::InvalidParameter, "percentile outside [0,100]");
  std::vector<double> sorted(img.pixels().begin(), img.pixels().end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

StretchResult contrast_stretch(const GrayImage& img, const StretchParams& params) {
  require(params.p_low >= 0.0 && params.p_high <= 100.0 && params.p_low < params.p_high,
          ErrorCode::InvalidParameter, "contrast stretch needs 0 <= p_low < p_high <= 100");
  const double lo = percentile(img, params.p_low);
  const double hi = percentile(img, params.p_high);
  // Percentiles closer than this are the same intensity up to rounding in
  // the preceding filters; stretching them would only amplify that noise.
  constexpr double kCoincident = 1e-12;
  if (!(hi - lo > kCoincident)) {
    return {GrayImage(img.width(), img.height(), 0.0), lo, hi, true};
  }
  std::vector<double> out(img.size());
  const double span = hi - lo;
  std::transform(img.pixels().begin(), img.pixels().end(), out.begin(),
                 [lo, span](double v) { return std::clamp((v - lo) / span, 0.0, 1.0); });
  return {GrayImage(img.width(), img.height(), std::move(out)), lo, hi, false};
}

GrayImage sharpen(const GrayImage& img, const SharpenParams& params) {
  require(std::isfinite(params.amount) && params.amount >= 0.0, ErrorCode::InvalidParameter,
          "sharpen amount must be >= 0");
  const GrayImage blurred = gaussian_blur(img, params.sigma);
  std::vector<double> out(img.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::clamp(img[i] + params.amount * (img[i] - blurred[i]), 0.0, 1.0);
  }
  return GrayImage(img.width(), img.height(), std::move(out));
}

IntensityStats intensity_stats(const GrayImage& img) {
  const auto px = img.pixels();
  const double n = static_cast<double>(px.size());
  const double mean = std::accumulate(px.begin(), px.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : px) {
    ss += (v - mean) * (v - mean);
  }
  const auto [mn, mx] = std::minmax_element(px.begin(), px.end());
  return {mean, std::sqrt(ss / n), *mn, *mx};
}

std::size_t distinct_intensities(const GrayImage& img) {
  std::vector<double> sorted(img.pixels().begin(), img.pixels().end());
  std::sort(sorted.begin(), sorted.end());
  return static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

}  // namespace osteo::imaging
