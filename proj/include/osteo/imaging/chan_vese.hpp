#pragma once

#include <optional>
#include <vector>

#include "osteo/image.hpp"

namespace osteo::imaging {

struct ChanVeseParams {
  double mu = 0.25;       // contour length weight
  double lambda1 = 1.0;   // inside fidelity
  double lambda2 = 1.0;   // outside fidelity
  int max_iter = 200;
  double tol = 1e-3;      // stop once fewer than tol * pixels change sign
  double dt = 0.5;
  double checkerboard_period = 25.0;
};

struct ChanVeseResult {
  BinaryMask mask;               // the phase with the higher mean intensity
  bool converged = false;
  int iterations = 0;
  double inside_mean = 0.0;      // mean of the returned foreground
  double outside_mean = 0.0;
  std::vector<double> energy;    // energy[0] is the initial partition
};

/// Discrete two-phase piecewise-constant energy of a partition, with the
/// phase constants set to the phase means and the contour length measured as
/// the isotropic total variation of the indicator.
double chan_vese_energy(const GrayImage& img, const BinaryMask& inside, const ChanVeseParams& params);

/// Two-phase Chan–Vese by explicit level-set gradient descent.
///
/// The level set starts from `init` (+1 inside, -1 outside) when given, else
/// from a sin·sin checkerboard. The fidelity force is divided by its peak
/// magnitude each iteration so a nearly balanced start still moves. A step
/// is accepted only if it does not raise
/// the discrete energy; otherwise the time step is halved (up to six times)
/// and, failing that, the evolution is treated as stationary. The returned
/// foreground is the higher-mean phase regardless of which side of the zero
/// level it sits on, so dark-on-bright objects come back as the background
/// plate. Non-convergence is reported through `converged`, not thrown.
ChanVeseResult chan_vese(const GrayImage& img, const ChanVeseParams& params = {},
                         const std::optional<BinaryMask>& init = std::nullopt);

}  // namespace osteo::imaging
