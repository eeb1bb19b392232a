#include "osteo/imaging/morphology.hpp"

#include <string>

#include "osteo/error.hpp"

namespace osteo::imaging {

namespace {

void check_fits(const BinaryMask& mask, const StructuringElement& se) {
  require(mask.width() >= se.diameter() && mask.height() >= se.diameter(), ErrorCode::InvalidParameter,
          "structuring element diameter " + std::to_string(se.diameter()) + " exceeds mask " +
              std::to_string(mask.width()) + "x" + std::to_string(mask.height()));
}

bool inside(const BinaryMask& m, int x, int y) {
  return x >= 0 && y >= 0 && x < m.width() && y < m.height();
}

}  // namespace

BinaryMask erode(const BinaryMask& mask, const StructuringElement& se) {
  check_fits(mask, se);
  BinaryMask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) {
        continue;
      }
      bool keep = true;
      for (const auto& o : se.offsets()) {
        const int sx = x + o.dx;
        const int sy = y + o.dy;
        if (!inside(mask, sx, sy) || !mask.at(sx, sy)) {
          keep = false;
          break;
        }
      }
      if (keep) {
        out.set(x, y, true);
      }
    }
  }
  return out;
}

BinaryMask dilate(const BinaryMask& mask, const StructuringElement& se) {
  check_fits(mask, se);
  BinaryMask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) {
        continue;
      }
      for (const auto& o : se.offsets()) {
        const int sx = x + o.dx;
        const int sy = y + o.dy;
        if (inside(mask, sx, sy)) {
          out.set(sx, sy, true);
        }
      }
    }
  }
  return out;
}

BinaryMask morph_open(const BinaryMask& mask, const StructuringElement& se) { return dilate(erode(mask, se), se); }

BinaryMask morph_close(const BinaryMask& mask, const StructuringElement& se) { return erode(dilate(mask, se), se); }

}  // namespace osteo::imaging
