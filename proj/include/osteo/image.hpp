#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace osteo {

/// Row-major single-channel raster with intensities in [0, 1].
///
/// 8-bit sources are mapped by v / 255; exports round v * 255. The
/// constructor rejects out-of-range or non-finite values so every image
/// that exists satisfies the range invariant.
class GrayImage {
 public:
  GrayImage(int width, int height, double fill = 0.0);
  GrayImage(int width, int height, std::vector<double> pixels);

  static GrayImage from_bytes(int width, int height, std::span<const std::uint8_t> bytes);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }

  double at(int x, int y) const { return pixels_[index(x, y)]; }
  double operator[](std::size_t i) const { return pixels_[i]; }
  std::span<const double> pixels() const noexcept { return pixels_; }

  /// Writes a value, clamping into [0, 1].
  void set(int x, int y, double value);

  /// 8-bit histogram bin of a pixel: round(v * 255).
  static int bin_of(double value);
  std::vector<std::uint8_t> to_bytes() const;

  bool same_shape(const GrayImage& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<double> pixels_;
};

/// Foreground/background raster. The foreground count is maintained on every
/// write so count() is O(1).
class BinaryMask {
 public:
  BinaryMask(int width, int height);
  BinaryMask(int width, int height, std::vector<std::uint8_t> bits);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(int x, int y, bool value);
  void set(std::size_t i, bool value);

  std::size_t count() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  BinaryMask complement() const;

  template <class Image>
  bool same_shape(const Image& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const BinaryMask& a, const BinaryMask& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.bits_ == b.bits_;
  }

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> bits_;
  std::size_t count_ = 0;
};

/// Per-pixel class indices from a multi-level thresholding, 0..classes-1.
struct ClassMap {
  int width = 0;
  int height = 0;
  int classes = 0;
  std::vector<std::uint8_t> classes_of;

  BinaryMask mask_of(int cls) const;
};

enum class Tissue : std::uint8_t { Background = 0, Tumor = 1, Neighbor = 2 };

/// Three-way tissue labelling: 0 background, 1 tumor, 2 neighboring region.
class LabelMask {
 public:
  LabelMask(int width, int height, std::vector<std::uint8_t> labels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::uint8_t at(int x, int y) const;
  std::uint8_t operator[](std::size_t i) const { return labels_[i]; }
  std::span<const std::uint8_t> labels() const noexcept { return labels_; }

  BinaryMask mask_of(Tissue tissue) const;
  const std::array<std::size_t, 3>& counts() const noexcept { return counts_; }

  /// Labels that occur at least once, ascending.
  std::vector<Tissue> present() const;

  /// True when a single label covers the whole image.
  bool degenerate() const noexcept;

  friend bool operator==(const LabelMask& a, const LabelMask& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.labels_ == b.labels_;
  }

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> labels_;
  std::array<std::size_t, 3> counts_{};
};

struct Offset {
  int dx;
  int dy;
};

/// Disk-shaped structuring element: all integer offsets with dx² + dy² <= r².
class StructuringElement {
 public:
  static StructuringElement disk(int radius);

  int radius() const noexcept { return radius_; }
  int diameter() const noexcept { return 2 * radius_ + 1; }
  std::span<const Offset> offsets() const noexcept { return offsets_; }

 private:
  explicit StructuringElement(int radius);

  int radius_;
  std::vector<Offset> offsets_;
};

}  // namespace osteo
