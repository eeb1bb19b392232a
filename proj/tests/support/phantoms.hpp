#pragma once

// Synthetic images with known ground truth for the segmentation tests.

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "osteo/image.hpp"

namespace osteo::testing {

struct Phantom {
  GrayImage image;
  BinaryMask truth;
};

inline bool in_disk(double x, double y, double cx, double cy, double r) {
  return (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r;
}

/// Disk of intensity `fg` on a `bg` plate.
inline Phantom disk_phantom(int w, int h, double cx, double cy, double r, double fg, double bg) {
  std::vector<double> px(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  BinaryMask truth(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool in = in_disk(x, y, cx, cy, r);
      px[static_cast<std::size_t>(y * w + x)] = in ? fg : bg;
      truth.set(x, y, in);
    }
  }
  return {GrayImage(w, h, std::move(px)), std::move(truth)};
}

inline double add_noise(double v, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, sigma);
  return std::clamp(v + n(rng), 0.0, 1.0);
}

/// Radiograph-like phantom: dark soft tissue, a vertical bright femoral
/// shaft and a brighter lesion blob inside the shaft, plus mild noise. The
/// truth mask is the blob.
inline Phantom xray_phantom(std::uint64_t seed, int size = 128, double blob_radius = 20.0, double shaft = 0.28) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-6.0, 6.0);
  const double cx = size / 2.0 + jitter(rng);
  const double cy = size / 2.0 + jitter(rng);
  const int shaft_lo = size * 3 / 8;
  const int shaft_hi = size * 5 / 8;
  std::vector<double> px(static_cast<std::size_t>(size) * static_cast<std::size_t>(size));
  BinaryMask truth(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double v = 0.15;
      if (x >= shaft_lo && x < shaft_hi) {
        v = shaft;
      }
      const bool lesion = in_disk(x, y, cx, cy, blob_radius);
      if (lesion) {
        v = 0.85;
      }
      truth.set(x, y, lesion);
      px[static_cast<std::size_t>(y * size + x)] = add_noise(v, 0.02, rng);
    }
  }
  return {GrayImage(size, size, std::move(px)), std::move(truth)};
}

struct MriPhantom {
  GrayImage image;
  BinaryMask tumor;
  BinaryMask muscle;
};

/// Axial-slice-like phantom: background 0.05, a horizontal muscle band at
/// 0.45 and a bright tumor disk at 0.9 centred in the band.
inline MriPhantom mri_phantom(std::uint64_t seed, int size = 128, double tumor_radius = 18.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-5.0, 5.0);
  const double cx = size / 2.0 + jitter(rng);
  const double cy = size / 2.0 + jitter(rng);
  const int band_lo = size / 4;
  const int band_hi = size * 3 / 4;
  std::vector<double> px(static_cast<std::size_t>(size) * static_cast<std::size_t>(size));
  BinaryMask tumor(size, size);
  BinaryMask muscle(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const bool t = in_disk(x, y, cx, cy, tumor_radius);
      const bool m = !t && y >= band_lo && y < band_hi;
      tumor.set(x, y, t);
      muscle.set(x, y, m);
      px[static_cast<std::size_t>(y * size + x)] = t ? 0.9 : (m ? 0.45 : 0.05);
    }
  }
  return {GrayImage(size, size, std::move(px)), std::move(tumor), std::move(muscle)};
}

/// Uniformly random 8-bit image.
inline GrayImage random_image(std::mt19937_64& rng, int w, int h) {
  std::uniform_int_distribution<int> level(0, 255);
  std::vector<double> px(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  for (double& v : px) {
    v = level(rng) / 255.0;
  }
  return GrayImage(w, h, std::move(px));
}

inline double iou(const BinaryMask& a, const BinaryMask& b) {
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += (a[i] && b[i]) ? 1 : 0;
    uni += (a[i] || b[i]) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace osteo::testing
