#include "osteo/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "osteo/error.hpp"

namespace osteo {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter: return "INVALID_PARAMETER";
    case ErrorCode::DegenerateImage: return "DEGENERATE_IMAGE";
    case ErrorCode::DegenerateHistogram: return "DEGENERATE_HISTOGRAM";
    case ErrorCode::DegenerateKmeans: return "DEGENERATE_KMEANS";
    case ErrorCode::DimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::EmptyMask: return "EMPTY_MASK";
    case ErrorCode::UnknownKey: return "UNKNOWN_KEY";
    case ErrorCode::InsufficientData: return "INSUFFICIENT_DATA";
    case ErrorCode::Io: return "IO_ERROR";
    case ErrorCode::Schema: return "SCHEMA_ERROR";
    case ErrorCode::MissingInput: return "MISSING_INPUT";
  }
  return "UNKNOWN";
}

Error Error::at_step(const std::string& step) const { return Error(code_, detail_, step); }

namespace {

void check_dimensions(int width, int height) {
  require(width >= 1 && height >= 1, ErrorCode::InvalidParameter,
          "image dimensions must be positive, got " + std::to_string(width) + "x" + std::to_string(height));
}

std::size_t pixel_count(int width, int height) {
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
}

}  // namespace

GrayImage::GrayImage(int width, int height, double fill) : width_(width), height_(height) {
  check_dimensions(width, height);
  require(std::isfinite(fill) && fill >= 0.0 && fill <= 1.0, ErrorCode::InvalidParameter,
          "fill intensity outside [0,1]");
  pixels_.assign(pixel_count(width, height), fill);
}

GrayImage::GrayImage(int width, int height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  check_dimensions(width, height);
  require(pixels_.size() == pixel_count(width, height), ErrorCode::DimensionMismatch,
          "pixel buffer length does not match width x height");
  for (double v : pixels_) {
    require(std::isfinite(v) && v >= 0.0 && v <= 1.0, ErrorCode::InvalidParameter, "intensity outside [0,1]");
  }
}

GrayImage GrayImage::from_bytes(int width, int height, std::span<const std::uint8_t> bytes) {
  std::vector<double> px(bytes.size());
  std::transform(bytes.begin(), bytes.end(), px.begin(), [](std::uint8_t b) { return b / 255.0; });
  return GrayImage(width, height, std::move(px));
}

void GrayImage::set(int x, int y, double value) {
  pixels_[index(x, y)] = std::clamp(value, 0.0, 1.0);
}

int GrayImage::bin_of(double value) {
  return static_cast<int>(std::lround(std::clamp(value, 0.0, 1.0) * 255.0));
}

std::vector<std::uint8_t> GrayImage::to_bytes() const {
  std::vector<std::uint8_t> out(pixels_.size());
  std::transform(pixels_.begin(), pixels_.end(), out.begin(),
                 [](double v) { return static_cast<std::uint8_t>(bin_of(v)); });
  return out;
}

BinaryMask::BinaryMask(int width, int height) : width_(width), height_(height) {
  check_dimensions(width, height);
  bits_.assign(pixel_count(width, height), 0);
}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  check_dimensions(width, height);
  require(bits_.size() == pixel_count(width, height), ErrorCode::DimensionMismatch,
          "mask buffer length does not match width x height");
  for (auto& b : bits_) {
    b = b != 0 ? 1 : 0;
    count_ += b;
  }
}

void BinaryMask::set(int x, int y, bool value) { set(index(x, y), value); }

void BinaryMask::set(std::size_t i, bool value) {
  const std::uint8_t v = value ? 1 : 0;
  if (bits_[i] != v) {
    bits_[i] = v;
    if (value) {
      ++count_;
    } else {
      --count_;
    }
  }
}

BinaryMask BinaryMask::complement() const {
  std::vector<std::uint8_t> out(bits_.size());
  std::transform(bits_.begin(), bits_.end(), out.begin(), [](std::uint8_t b) -> std::uint8_t { return b ? 0 : 1; });
  return BinaryMask(width_, height_, std::move(out));
}

BinaryMask ClassMap::mask_of(int cls) const {
  std::vector<std::uint8_t> bits(classes_of.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    bits[i] = classes_of[i] == cls ? 1 : 0;
  }
  return BinaryMask(width, height, std::move(bits));
}

LabelMask::LabelMask(int width, int height, std::vector<std::uint8_t> labels)
    : width_(width), height_(height), labels_(std::move(labels)) {
  check_dimensions(width, height);
  require(labels_.size() == pixel_count(width, height), ErrorCode::DimensionMismatch,
          "label buffer length does not match width x height");
  for (std::uint8_t l : labels_) {
    require(l <= 2, ErrorCode::InvalidParameter, "label outside {0,1,2}: " + std::to_string(l));
    ++counts_[l];
  }
}

std::uint8_t LabelMask::at(int x, int y) const {
  return labels_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)];
}

BinaryMask LabelMask::mask_of(Tissue tissue) const {
  const auto want = static_cast<std::uint8_t>(tissue);
  std::vector<std::uint8_t> bits(labels_.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    bits[i] = labels_[i] == want ? 1 : 0;
  }
  return BinaryMask(width_, height_, std::move(bits));
}

std::vector<Tissue> LabelMask::present() const {
  std::vector<Tissue> out;
  for (std::uint8_t l = 0; l < 3; ++l) {
    if (counts_[l] > 0) {
      out.push_back(static_cast<Tissue>(l));
    }
  }
  return out;
}

bool LabelMask::degenerate() const noexcept {
  return std::count_if(counts_.begin(), counts_.end(), [](std::size_t c) { return c > 0; }) <= 1;
}

StructuringElement::StructuringElement(int radius) : radius_(radius) {
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy <= radius * radius) {
        offsets_.push_back({dx, dy});
      }
    }
  }
}

StructuringElement StructuringElement::disk(int radius) {
  require(radius >= 1, ErrorCode::InvalidParameter, "structuring element radius must be >= 1");
  return StructuringElement(radius);
}

}  // namespace osteo
