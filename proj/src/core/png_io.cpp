#include "osteo/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "osteo/error.hpp"

namespace osteo::io {

namespace {

struct ImageGuard {
  png_image image{};
  ImageGuard() {
    image.version = PNG_IMAGE_VERSION;
  }
  ~ImageGuard() { png_image_free(&image); }
  ImageGuard(const ImageGuard&) = delete;
  ImageGuard& operator=(const ImageGuard&) = delete;
};

// Decoded 8-bit raster: one byte per pixel, or three when `rgb`.
struct Raw {
  int width = 0;
  int height = 0;
  bool rgb = false;
  std::vector<std::uint8_t> bytes;
};

Raw decode_raw(std::span<const std::uint8_t> bytes) {
  ImageGuard g;
  if (!png_image_begin_read_from_memory(&g.image, bytes.data(), bytes.size())) {
    fail(ErrorCode::Io, std::string("png decode failed: ") + g.image.message);
  }
  const bool colour = (g.image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  g.image.format = colour ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(g.image));
  if (!png_image_finish_read(&g.image, nullptr, buf.data(), 0, nullptr)) {
    fail(ErrorCode::Io, std::string("png decode failed: ") + g.image.message);
  }
  Raw raw;
  raw.width = static_cast<int>(g.image.width);
  raw.height = static_cast<int>(g.image.height);
  raw.rgb = colour;
  raw.bytes = std::move(buf);
  return raw;
}

}  // namespace

GrayImage decode_png(std::span<const std::uint8_t> bytes) {
  const Raw raw = decode_raw(bytes);
  if (!raw.rgb) {
    return GrayImage::from_bytes(raw.width, raw.height, raw.bytes);
  }
  std::vector<double> px(static_cast<std::size_t>(raw.width) * static_cast<std::size_t>(raw.height));
  for (std::size_t i = 0; i < px.size(); ++i) {
    const double r = raw.bytes[3 * i];
    const double g = raw.bytes[3 * i + 1];
    const double b = raw.bytes[3 * i + 2];
    px[i] = std::clamp((0.299 * r + 0.587 * g + 0.114 * b) / 255.0, 0.0, 1.0);
  }
  return GrayImage(raw.width, raw.height, std::move(px));
}

GrayImage read_png(const std::filesystem::path& path) {
  try {
    return decode_png(read_bytes(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

std::vector<std::uint8_t> encode_gray8(int width, int height, std::span<const std::uint8_t> bytes) {
  ImageGuard g;
  g.image.width = static_cast<png_uint_32>(width);
  g.image.height = static_cast<png_uint_32>(height);
  g.image.format = PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&g.image, nullptr, &size, 0, bytes.data(), 0, nullptr)) {
    fail(ErrorCode::Io, std::string("png encode failed: ") + g.image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&g.image, out.data(), &size, 0, bytes.data(), 0, nullptr)) {
    fail(ErrorCode::Io, std::string("png encode failed: ") + g.image.message);
  }
  out.resize(size);
  return out;
}

std::vector<std::uint8_t> encode_png(const GrayImage& img) {
  return encode_gray8(img.width(), img.height(), img.to_bytes());
}

std::vector<std::uint8_t> encode_png(const BinaryMask& mask) {
  std::vector<std::uint8_t> bytes(mask.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = mask[i] ? 255 : 0;
  }
  return encode_gray8(mask.width(), mask.height(), bytes);
}

std::vector<std::uint8_t> encode_png(const LabelMask& labels) {
  static constexpr std::uint8_t kLevels[3] = {0, 128, 255};
  std::vector<std::uint8_t> bytes(labels.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = kLevels[labels[i]];
  }
  return encode_gray8(labels.width(), labels.height(), bytes);
}

void write_png(const std::filesystem::path& path, const GrayImage& img) { write_bytes(path, encode_png(img)); }
void write_png(const std::filesystem::path& path, const BinaryMask& mask) { write_bytes(path, encode_png(mask)); }
void write_png(const std::filesystem::path& path, const LabelMask& labels) { write_bytes(path, encode_png(labels)); }

BinaryMask read_mask_png(const std::filesystem::path& path) {
  const GrayImage img = read_png(path);
  std::vector<std::uint8_t> bits(img.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    bits[i] = GrayImage::bin_of(img[i]) != 0 ? 1 : 0;
  }
  return BinaryMask(img.width(), img.height(), std::move(bits));
}

LabelMask read_label_png(const std::filesystem::path& path) {
  const GrayImage img = read_png(path);
  std::vector<std::uint8_t> labels(img.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int b = GrayImage::bin_of(img[i]);
    labels[i] = b < 64 ? 0 : (b < 192 ? 1 : 2);
  }
  return LabelMask(img.width(), img.height(), std::move(labels));
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    fail(ErrorCode::Io, "cannot open for writing: " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    fail(ErrorCode::Io, "write failed: " + path.string());
  }
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(ErrorCode::Io, "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace osteo::io
