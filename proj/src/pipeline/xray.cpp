#include "osteo/pipeline/xray.hpp"

#include <cmath>
#include <optional>

#include "osteo/error.hpp"
#include "osteo/imaging/threshold.hpp"

namespace osteo::xray {

namespace {

template <class Fn>
auto run_step(const char* step, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw e.at_step(step);
  }
}

void positive(double v, const char* field) {
  require(std::isfinite(v) && v > 0.0, ErrorCode::InvalidParameter, std::string(field) + " must be > 0");
}

}  // namespace

void XrayConfig::validate() const {
  positive(gaussian_sigma, "gaussian_sigma");
  positive(gamma1, "gamma1");
  positive(gamma2, "gamma2");
  positive(clahe.clip_limit, "clahe.clip_limit");
  require(clahe.tiles_x >= 1 && clahe.tiles_y >= 1, ErrorCode::InvalidParameter, "clahe tiles must be >= 1");
  require(stretch.p_low >= 0.0 && stretch.p_high <= 100.0 && stretch.p_low < stretch.p_high,
          ErrorCode::InvalidParameter, "stretch percentiles must satisfy 0 <= p_low < p_high <= 100");
  require(chan_vese.mu >= 0.0, ErrorCode::InvalidParameter, "chan_vese.mu must be >= 0");
  positive(chan_vese.lambda1, "chan_vese.lambda1");
  positive(chan_vese.lambda2, "chan_vese.lambda2");
  positive(chan_vese.tol, "chan_vese.tol");
  positive(chan_vese.dt, "chan_vese.dt");
  require(chan_vese.max_iter >= 1, ErrorCode::InvalidParameter, "chan_vese.max_iter must be >= 1");
}

XraySegmentation segment_xray(const GrayImage& img, const XrayConfig& cfg, bool record_intermediates) {
  run_step("config", [&] {
    cfg.validate();
    return 0;
  });

  std::vector<Intermediate> steps;
  auto keep = [&](const char* name, const auto& data) {
    if (record_intermediates) {
      steps.push_back({name, data});
    }
  };

  const GrayImage blurred = run_step("gaussian_blur", [&] { return imaging::gaussian_blur(img, cfg.gaussian_sigma); });
  keep("gaussian_blur", blurred);
  const GrayImage brightened = run_step("gamma1", [&] { return imaging::gamma_correct(blurred, cfg.gamma1); });
  keep("gamma1", brightened);
  const GrayImage equalized = run_step("clahe", [&] { return imaging::clahe(brightened, cfg.clahe); });
  keep("clahe", equalized);
  const auto stretched = run_step("contrast_stretch", [&] { return imaging::contrast_stretch(equalized, cfg.stretch); });
  keep("contrast_stretch", stretched.image);
  const auto otsu = run_step("otsu", [&] { return imaging::otsu_threshold(stretched.image); });
  keep("otsu", otsu.mask);

  const GrayImage* cv_input = &stretched.image;
  if (cfg.chan_vese_input == ChanVeseInput::Original) {
    cv_input = &img;
  } else if (cfg.chan_vese_input == ChanVeseInput::Equalized) {
    cv_input = &equalized;
  }
  const auto cv = run_step("chan_vese", [&] {
    return imaging::chan_vese(*cv_input, cfg.chan_vese, std::optional<BinaryMask>(otsu.mask));
  });
  keep("chan_vese", cv.mask);
  GrayImage display = run_step("gamma2", [&] { return imaging::gamma_correct(stretched.image, cfg.gamma2); });
  keep("gamma2", display);

  return XraySegmentation{cv.mask,
                          otsu.mask,
                          otsu.threshold,
                          std::move(display),
                          cv.converged,
                          cv.iterations,
                          stretched.degenerate,
                          cfg,
                          std::move(steps)};
}

}  // namespace osteo::xray
