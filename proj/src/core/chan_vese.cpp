#include "osteo/imaging/chan_vese.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "osteo/error.hpp"

namespace osteo::imaging {

namespace {

constexpr double kHeavisideEps = 1.0;
constexpr double kGradEps = 1e-8;
constexpr int kMaxStepHalvings = 6;

struct PhaseMeans {
  double inside = 0.0;
  double outside = 0.0;
  std::size_t inside_count = 0;
};

PhaseMeans phase_means(const GrayImage& img, const std::vector<std::uint8_t>& in) {
  double s_in = 0.0;
  double s_out = 0.0;
  std::size_t n_in = 0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i]) {
      s_in += img[i];
      ++n_in;
    } else {
      s_out += img[i];
    }
  }
  const std::size_t n_out = in.size() - n_in;
  PhaseMeans m;
  m.inside_count = n_in;
  m.inside = n_in ? s_in / static_cast<double>(n_in) : 0.0;
  m.outside = n_out ? s_out / static_cast<double>(n_out) : 0.0;
  // An empty phase takes the other's mean so it exerts no data force.
  if (n_in == 0) m.inside = m.outside;
  if (n_out == 0) m.outside = m.inside;
  return m;
}

double energy_of(const GrayImage& img, const std::vector<std::uint8_t>& in, const ChanVeseParams& p) {
  const int w = img.width();
  const int h = img.height();
  const PhaseMeans m = phase_means(img, in);
  double data = 0.0;
  double length = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
      const double u = img[i];
      data += in[i] ? p.lambda1 * (u - m.inside) * (u - m.inside) : p.lambda2 * (u - m.outside) * (u - m.outside);
      const int dx = x + 1 < w ? int(in[i + 1]) - int(in[i]) : 0;
      const int dy = y + 1 < h ? int(in[i + static_cast<std::size_t>(w)]) - int(in[i]) : 0;
      if (dx != 0 || dy != 0) {
        length += std::sqrt(static_cast<double>(dx * dx + dy * dy));
      }
    }
  }
  return p.mu * length + data;
}

void sign_partition(const std::vector<double>& phi, std::vector<std::uint8_t>& in) {
  in.resize(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    in[i] = phi[i] > 0.0 ? 1 : 0;
  }
}

// Speed field F = δ(φ) [μ κ + (λ2 (u − c2)² − λ1 (u − c1)²) / peak] with κ the
// divergence of the normalized gradient (forward/backward differences).
std::vector<double> speed(const GrayImage& img, const std::vector<double>& phi, const PhaseMeans& m,
                          const ChanVeseParams& p) {
  const int w = img.width();
  const int h = img.height();
  auto at = [&](int x, int y) {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return phi[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)];
  };
  // Unit normal components on the forward-difference grid.
  std::vector<double> nx(phi.size());
  std::vector<double> ny(phi.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double fx = at(x + 1, y) - at(x, y);
      const double fy = at(x, y + 1) - at(x, y);
      const double cy = 0.5 * (at(x, y + 1) - at(x, y - 1));
      const double cx = 0.5 * (at(x + 1, y) - at(x - 1, y));
      const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
      nx[i] = fx / std::sqrt(fx * fx + cy * cy + kGradEps);
      ny[i] = fy / std::sqrt(fy * fy + cx * cx + kGradEps);
    }
  }
  // Data force scaled to unit peak so the step size does not depend on the
  // current contrast between the phase means.
  std::vector<double> data(phi.size());
  double peak = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const double u = img[i];
    data[i] = -p.lambda1 * (u - m.inside) * (u - m.inside) + p.lambda2 * (u - m.outside) * (u - m.outside);
    peak = std::max(peak, std::fabs(data[i]));
  }
  const double scale = peak > 0.0 ? 1.0 / peak : 0.0;

  std::vector<double> f(phi.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
      const double nx_back = x > 0 ? nx[i - 1] : 0.0;
      const double ny_back = y > 0 ? ny[i - static_cast<std::size_t>(w)] : 0.0;
      const double kappa = (nx[i] - nx_back) + (ny[i] - ny_back);
      const double delta = kHeavisideEps / (std::numbers::pi * (kHeavisideEps * kHeavisideEps + phi[i] * phi[i]));
      f[i] = delta * (p.mu * kappa + scale * data[i]);
    }
  }
  return f;
}

void validate(const ChanVeseParams& p) {
  require(std::isfinite(p.mu) && p.mu >= 0.0, ErrorCode::InvalidParameter, "chan-vese mu must be >= 0");
  require(std::isfinite(p.lambda1) && p.lambda1 > 0.0 && std::isfinite(p.lambda2) && p.lambda2 > 0.0,
          ErrorCode::InvalidParameter, "chan-vese lambda1/lambda2 must be > 0");
  require(p.max_iter >= 1, ErrorCode::InvalidParameter, "chan-vese max_iter must be >= 1");
  require(std::isfinite(p.tol) && p.tol > 0.0, ErrorCode::InvalidParameter, "chan-vese tol must be > 0");
  require(std::isfinite(p.dt) && p.dt > 0.0, ErrorCode::InvalidParameter, "chan-vese dt must be > 0");
  require(std::isfinite(p.checkerboard_period) && p.checkerboard_period > 0.0, ErrorCode::InvalidParameter,
          "chan-vese checkerboard period must be > 0");
}

}  // namespace

double chan_vese_energy(const GrayImage& img, const BinaryMask& inside, const ChanVeseParams& params) {
  require(inside.same_shape(img), ErrorCode::DimensionMismatch, "partition and image differ in size");
  std::vector<std::uint8_t> in(inside.bits().begin(), inside.bits().end());
  return energy_of(img, in, params);
}

ChanVeseResult chan_vese(const GrayImage& img, const ChanVeseParams& params, const std::optional<BinaryMask>& init) {
  validate(params);
  const auto [mn, mx] = std::minmax_element(img.pixels().begin(), img.pixels().end());
  require(*mx > *mn, ErrorCode::DegenerateImage, "chan-vese needs a non-constant image");

  const int w = img.width();
  const int h = img.height();
  std::vector<double> phi(img.size());
  if (init) {
    require(init->same_shape(img), ErrorCode::DimensionMismatch, "chan-vese initial mask differs in size");
    for (std::size_t i = 0; i < phi.size(); ++i) {
      phi[i] = (*init)[i] ? 1.0 : -1.0;
    }
  } else {
    const double k = 2.0 * std::numbers::pi / params.checkerboard_period;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        phi[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] =
            std::sin(k * x) * std::sin(k * y);
      }
    }
  }

  ChanVeseResult result{BinaryMask(w, h), false, 0, 0.0, 0.0, {}};
  std::vector<std::uint8_t> in;
  sign_partition(phi, in);
  double energy = energy_of(img, in, params);
  result.energy.push_back(energy);

  std::vector<double> candidate(phi.size());
  std::vector<std::uint8_t> candidate_in;
  const auto flip_budget = static_cast<double>(img.size()) * params.tol;

  for (int iter = 0; iter < params.max_iter; ++iter) {
    const std::vector<double> f = speed(img, phi, phase_means(img, in), params);
    bool accepted = false;
    double dt = params.dt;
    double candidate_energy = energy;
    for (int attempt = 0; attempt <= kMaxStepHalvings; ++attempt, dt *= 0.5) {
      for (std::size_t i = 0; i < phi.size(); ++i) {
        candidate[i] = phi[i] + dt * f[i];
      }
      sign_partition(candidate, candidate_in);
      candidate_energy = energy_of(img, candidate_in, params);
      if (candidate_energy <= energy) {
        accepted = true;
        break;
      }
    }
    result.iterations = iter + 1;
    if (!accepted) {
      // No admissible descent step: stationary for this flow.
      result.energy.push_back(energy);
      result.converged = true;
      break;
    }
    std::size_t flips = 0;
    for (std::size_t i = 0; i < in.size(); ++i) {
      flips += in[i] != candidate_in[i] ? 1 : 0;
    }
    phi.swap(candidate);
    in.swap(candidate_in);
    energy = candidate_energy;
    result.energy.push_back(energy);
    if (static_cast<double>(flips) < flip_budget) {
      result.converged = true;
      break;
    }
  }

  const PhaseMeans m = phase_means(img, in);
  const bool inside_is_bright = m.inside >= m.outside;
  for (std::size_t i = 0; i < in.size(); ++i) {
    result.mask.set(i, (in[i] != 0) == inside_is_bright);
  }
  result.inside_mean = inside_is_bright ? m.inside : m.outside;
  result.outside_mean = inside_is_bright ? m.outside : m.inside;
  return result;
}

}  // namespace osteo::imaging
