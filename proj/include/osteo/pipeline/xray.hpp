#pragma once

#include <string>
#include <variant>
#include <vector>

#include "osteo/image.hpp"
#include "osteo/imaging/chan_vese.hpp"
#include "osteo/imaging/filters.hpp"

namespace osteo::xray {

/// Image the Chan–Vese refinement runs on.
enum class ChanVeseInput { Original, Equalized, Stretched };

struct XrayConfig {
  double gaussian_sigma = 1.0;
  double gamma1 = 0.8;
  imaging::ClaheParams clahe;
  imaging::StretchParams stretch;
  imaging::ChanVeseParams chan_vese;
  double gamma2 = 1.2;
  ChanVeseInput chan_vese_input = ChanVeseInput::Stretched;

  /// Throws InvalidParameter naming the offending field.
  void validate() const;
};

struct Intermediate {
  std::string step;
  std::variant<GrayImage, BinaryMask> data;
};

struct XraySegmentation {
  BinaryMask lesion_mask;
  BinaryMask otsu_mask;
  double otsu_threshold = 0.0;
  GrayImage display;  // stretched image after the second gamma correction
  bool converged = false;
  int chan_vese_iterations = 0;
  bool stretch_degenerate = false;
  XrayConfig config;
  std::vector<Intermediate> intermediates;  // pipeline order, when recorded
};

/// Step names in execution order.
inline constexpr const char* kXraySteps[] = {"gaussian_blur", "gamma1",    "clahe", "contrast_stretch",
                                             "otsu",          "chan_vese", "gamma2"};

/// Seven-step lesion segmentation: blur, gamma, CLAHE, contrast stretch,
/// Otsu, Chan–Vese seeded from the Otsu mask, and a display-only gamma.
/// Any step failure is rethrown as an Error tagged with the step name.
XraySegmentation segment_xray(const GrayImage& img, const XrayConfig& cfg = {}, bool record_intermediates = false);

}  // namespace osteo::xray
