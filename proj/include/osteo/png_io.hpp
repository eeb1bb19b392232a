#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "osteo/image.hpp"

namespace osteo::io {

/// Reads a PNG as grayscale. Colour images are reduced with luminance
/// 0.299 R + 0.587 G + 0.114 B; alpha is composited onto black by libpng.
GrayImage read_png(const std::filesystem::path& path);
GrayImage decode_png(std::span<const std::uint8_t> bytes);

/// 8-bit grayscale PNG encoding of raw bytes.
std::vector<std::uint8_t> encode_gray8(int width, int height, std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_png(const GrayImage& img);
std::vector<std::uint8_t> encode_png(const BinaryMask& mask);  // 0 / 255
std::vector<std::uint8_t> encode_png(const LabelMask& labels); // 0 / 128 / 255

void write_png(const std::filesystem::path& path, const GrayImage& img);
void write_png(const std::filesystem::path& path, const BinaryMask& mask);
void write_png(const std::filesystem::path& path, const LabelMask& labels);

/// Inverse of the mask encodings. Binary: any non-zero byte is foreground.
/// Labels: nearest of {0, 128, 255}.
BinaryMask read_mask_png(const std::filesystem::path& path);
LabelMask read_label_png(const std::filesystem::path& path);

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

}  // namespace osteo::io
