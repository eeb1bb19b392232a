#pragma once

#include "osteo/image.hpp"

namespace osteo::imaging {

// Pixels outside the mask count as background for both operators, so
// erosion shrinks regions that touch the border.
BinaryMask erode(const BinaryMask& mask, const StructuringElement& se);
BinaryMask dilate(const BinaryMask& mask, const StructuringElement& se);

/// Erosion then dilation.
BinaryMask morph_open(const BinaryMask& mask, const StructuringElement& se);

/// Dilation then erosion.
BinaryMask morph_close(const BinaryMask& mask, const StructuringElement& se);

}  // namespace osteo::imaging
