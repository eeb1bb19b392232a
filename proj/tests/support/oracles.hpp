#pragma once

// Independent reference implementations. Deliberately naive: they share no
// code with the library beyond the image containers.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "osteo/image.hpp"

namespace osteo::oracle {

using u128 = unsigned __int128;

inline int bin(double v) {
  return static_cast<int>(std::lround(v * 255.0));
}

inline std::array<std::uint64_t, 256> histogram(const GrayImage& img) {
  std::array<std::uint64_t, 256> h{};
  for (double v : img.pixels()) {
    ++h[static_cast<std::size_t>(bin(v))];
  }
  return h;
}

// Between-class criterion sum_k S_k^2 / n_k as an exact fraction num / den,
// where S_k is the sum of bin indices in class k.
struct Fraction {
  u128 num = 0;
  u128 den = 1;
};

inline bool greater(const Fraction& a, const Fraction& b) {
  return a.num * b.den > b.num * a.den;
}

struct Prefix {
  std::array<u128, 257> n{};  // n[b] = pixels with bin < b
  std::array<u128, 257> s{};  // s[b] = sum of bin indices below b
};

inline Prefix prefix(const std::array<std::uint64_t, 256>& h) {
  Prefix p;
  for (std::size_t b = 0; b < 256; ++b) {
    p.n[b + 1] = p.n[b] + h[b];
    p.s[b + 1] = p.s[b] + static_cast<u128>(h[b]) * b;
  }
  return p;
}

inline u128 gcd(u128 a, u128 b) {
  while (b != 0) {
    const u128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

// f + s^2 / n, reduced once the denominator grows large.
inline Fraction add_class(const Fraction& f, u128 n, u128 s) {
  Fraction out{f.num * n + s * s * f.den, f.den * n};
  if (out.den > (u128(1) << 48)) {
    const u128 g = gcd(out.num, out.den);
    out.num /= g;
    out.den /= g;
  }
  return out;
}

/// Exhaustive search over every ordered cut tuple, lowest tuple on ties. The
/// criterion sum_k S_k^2 / n_k (S_k = sum of bin indices in class k) is kept
/// as an exact fraction; class k spans bins (cuts[k-1], cuts[k]].
inline std::vector<int> brute_force_cuts(const GrayImage& img, int classes) {
  const Prefix p = prefix(histogram(img));
  std::vector<int> best;
  Fraction best_f{0, 0};
  std::vector<int> cuts(static_cast<std::size_t>(classes - 1));
  auto visit = [&](auto&& self, std::size_t depth, int from, const Fraction& acc) -> void {
    const auto lo = static_cast<std::size_t>(from);
    if (depth == cuts.size()) {
      const u128 n = p.n[256] - p.n[lo];
      if (n == 0) {
        return;
      }
      const Fraction f = add_class(acc, n, p.s[256] - p.s[lo]);
      if (best.empty() || greater(f, best_f)) {
        best = cuts;
        best_f = f;
      }
      return;
    }
    for (int t = from; t <= 254; ++t) {
      const auto hi = static_cast<std::size_t>(t) + 1;
      const u128 n = p.n[hi] - p.n[lo];
      if (n == 0) {
        continue;  // empty class
      }
      cuts[depth] = t;
      self(self, depth + 1, t + 1, add_class(acc, n, p.s[hi] - p.s[lo]));
    }
  };
  visit(visit, 0, 0, Fraction{0, 1});
  return best;
}

/// Global histogram equalization: bin b maps to (pixels with bin <= b) / N;
/// a single occupied bin maps to itself.
inline GrayImage global_equalization(const GrayImage& img) {
  const auto h = histogram(img);
  const double n = static_cast<double>(img.size());
  int occupied = 0;
  for (auto c : h) {
    occupied += c > 0 ? 1 : 0;
  }
  std::vector<double> out(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const int b = bin(img[i]);
    if (occupied <= 1) {
      out[i] = b / 255.0;
      continue;
    }
    std::uint64_t below = 0;
    for (int j = 0; j <= b; ++j) {
      below += h[static_cast<std::size_t>(j)];
    }
    out[i] = static_cast<double>(below) / n;
  }
  return GrayImage(img.width(), img.height(), std::move(out));
}

/// Direct 2-D convolution with a truncated, renormalized Gaussian and edge
/// replication.
inline GrayImage direct_blur(const GrayImage& img, double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  double total = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      total += std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    }
  }
  std::vector<double> out(img.size());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double acc = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const int sx = std::clamp(x + dx, 0, img.width() - 1);
          const int sy = std::clamp(y + dy, 0, img.height() - 1);
          acc += img.at(sx, sy) * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        }
      }
      out[static_cast<std::size_t>(y * img.width() + x)] = std::clamp(acc / total, 0.0, 1.0);
    }
  }
  return GrayImage(img.width(), img.height(), std::move(out));
}

using PointSet = std::set<std::pair<int, int>>;

inline PointSet disk_points(int r) {
  PointSet s;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (dx * dx + dy * dy <= r * r) {
        s.emplace(dx, dy);
      }
    }
  }
  return s;
}

inline PointSet to_points(const BinaryMask& m) {
  PointSet s;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (m.at(x, y)) {
        s.emplace(x, y);
      }
    }
  }
  return s;
}

inline BinaryMask from_points(const PointSet& s, int w, int h) {
  BinaryMask m(w, h);
  for (const auto& [x, y] : s) {
    if (x >= 0 && y >= 0 && x < w && y < h) {
      m.set(x, y, true);
    }
  }
  return m;
}

// Minkowski sum clipped to the frame.
inline PointSet minkowski_dilate(const PointSet& a, const PointSet& se, int w, int h) {
  PointSet out;
  for (const auto& [x, y] : a) {
    for (const auto& [dx, dy] : se) {
      const int nx = x + dx;
      const int ny = y + dy;
      if (nx >= 0 && ny >= 0 && nx < w && ny < h) {
        out.emplace(nx, ny);
      }
    }
  }
  return out;
}

// Points whose whole translated element lies in `a`; the outside of the
// frame is not in `a`.
inline PointSet minkowski_erode(const PointSet& a, const PointSet& se, int w, int h) {
  PointSet out;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool all = true;
      for (const auto& [dx, dy] : se) {
        if (!a.count({x + dx, y + dy})) {
          all = false;
          break;
        }
      }
      if (all) {
        out.emplace(x, y);
      }
    }
  }
  return out;
}

struct Counts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

inline Counts count_pixels(const BinaryMask& pred, const BinaryMask& gt) {
  Counts c;
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      const bool p = pred.at(x, y);
      const bool g = gt.at(x, y);
      c.tp += p && g;
      c.fp += p && !g;
      c.fn += !p && g;
      c.tn += !p && !g;
    }
  }
  return c;
}

/// Sum of squared distances to the nearest of `centers`.
inline double assignment_sse(const GrayImage& img, const std::vector<double>& centers) {
  double sse = 0.0;
  for (double v : img.pixels()) {
    double best = std::numeric_limits<double>::infinity();
    for (double c : centers) {
      best = std::min(best, (v - c) * (v - c));
    }
    sse += best;
  }
  return sse;
}

/// Best within-cluster SSE over `restarts` Lloyd runs, each started from k
/// distinct pixel values drawn uniformly.
inline double best_of_restarts(const GrayImage& img, int k, int restarts, std::uint64_t seed) {
  std::vector<double> values(img.pixels().begin(), img.pixels().end());
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::mt19937 rng(static_cast<std::uint32_t>(seed));
  double best = std::numeric_limits<double>::infinity();
  for (int run = 0; run < restarts; ++run) {
    std::vector<double> pool = values;
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<double> c(pool.begin(), pool.begin() + k);
    for (int it = 0; it < 1000; ++it) {
      std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
      std::vector<double> n(static_cast<std::size_t>(k), 0.0);
      for (double v : img.pixels()) {
        std::size_t j = 0;
        for (std::size_t q = 1; q < c.size(); ++q) {
          if ((v - c[q]) * (v - c[q]) < (v - c[j]) * (v - c[j])) {
            j = q;
          }
        }
        sum[j] += v;
        n[j] += 1.0;
      }
      std::vector<double> next = c;
      for (std::size_t q = 0; q < c.size(); ++q) {
        if (n[q] > 0.0) {
          next[q] = sum[q] / n[q];
        }
      }
      if (next == c) {
        break;
      }
      c = next;
    }
    best = std::min(best, assignment_sse(img, c));
  }
  return best;
}

}  // namespace osteo::oracle
