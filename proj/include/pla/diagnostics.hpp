#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "pla/samplers.hpp"
#include "pla/targets.hpp"
#include "pla/types.hpp"

namespace pla {

struct EmpiricalMoments {
  long count = 0;
  Vector mean;
  Matrix cov;      // unbiased, symmetric, eigenvalues clipped at 0
  Vector mean_se;
  Matrix cov_se;   // standard error of each covariance entry
};

/// Moments across the rows of `samples` (one sample per row). Sums are
/// pairwise, so the result does not depend on how rows were produced.
EmpiricalMoments moments(ConstMatrixRef samples);

/// Moments of the final iterates across chains.
EmpiricalMoments moments(const Trace& trace);

/// KL(N(mean, cov) || target), computed in the target eigenbasis.
/// Throws SingularError when the fitted covariance is not positive definite.
double gaussian_fit_kl(const EmpiricalMoments& em, const GaussianTarget& target);

struct BootstrapEstimate {
  double value = 0.0;  // plug-in estimate on the full sample
  double se = 0.0;     // spread over bootstrap replicates
  int replicates = 0;
};

BootstrapEstimate bootstrap_fit_kl(ConstMatrixRef samples,
                                   const GaussianTarget& target,
                                   int replicates, std::uint64_t seed);

struct HistogramGrid {
  double lo = -8.0;
  double hi = 8.0;
  std::optional<double> bin_width;  // Freedman-Diaconis when empty
  int subdivisions = 16;            // trapezoid panels per bin for the target
};

struct HistogramKl {
  double kl = 0.0;
  double binning_floor = 0.0;  // ~ upper 3-sigma of the estimator at zero bias
  int bins = 0;
  int occupied = 0;
  long outside = 0;            // samples beyond [lo, hi], ignored
  double width = 0.0;
  bool smoothed = false;       // some target bin mass was zero and got 1e-12
};

/// Discrete KL between the sample histogram and the binned target e^{-f}.
/// The grid must reach 4 sample standard deviations either side of the mean.
HistogramKl kl_vs_quadrature_1d(std::span<const double> samples, const Potential& p,
                                const HistogramGrid& grid = {});

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  bool reliable = false;  // r_squared >= 0.95
};

/// Least squares of log(bias) against log(eps).
ScalingFit bias_scaling_fit(std::span<const double> eps, std::span<const double> bias);

}  // namespace pla
