#pragma once

#include <cstdint>
#include <vector>

#include "pla/prox.hpp"
#include "pla/rng.hpp"
#include "pla/targets.hpp"
#include "pla/types.hpp"

namespace pla::sde {

// One PLA step is the time-eps value of X_t = X_0 - t grad f(X_t) + sqrt(2) W_t.
// That process solves dX = mu dt + sqrt(2 G) dW with
//   G  = (I + t hess f(x))^{-2},
//   mu = -(I + t hess f)^{-1} (grad f + t Tr(D3f G)),
// where Tr(D3f G)_i = Tr(d_i hess f . G). The shifted drift
// mu~ = mu - div G + G grad f measures the distance from the weighted
// Langevin drift div G - G grad f.

enum class DivergenceMode { analytic, finite_difference };

struct InterpolationQuantities {
  double t = 0.0;
  Matrix G;
  Matrix sqrtG;  // (I + t hess f)^{-1}
  Vector mu;
  Vector mu_tilde;
  Vector div_G;  // (div G)_i = sum_j dG_ij / dx_j
  bool approximate = false;  // div G came from finite differences
};

/// Requires third derivatives (mu needs them in either mode). Throws
/// SingularError when I + t hess f(x) is not invertible.
InterpolationQuantities interpolation_quantities(
    const Potential& p, ConstVectorRef x, double t,
    DivergenceMode mode = DivergenceMode::analytic, double fd_step = 1e-5);

/// d G / d x_k, analytic: -t (S T_k G + G T_k S) with S = sqrtG and
/// T_k = d_k hess f.
Matrix gradient_of_G(const Potential& p, ConstVectorRef x, double t, int k);

/// Central-difference estimate of d G / d x_k.
Matrix gradient_of_G_fd(const Potential& p, ConstVectorRef x, double t, int k,
                        double h = 1e-5);

/// min{1/(8L), 1/M}; requires M to be known.
double interpolation_time_limit(const Potential& p);

struct EnvelopeReport {
  double G_min_eig = 0.0;
  double G_max_eig = 0.0;
  double eig_lower_slack = 0.0;  // min eig(G) - 3/4
  double eig_upper_slack = 0.0;  // 4/3 - max eig(G)
  double mu_tilde_norm = 0.0;
  double mu_tilde_bound = 0.0;   // (4/3) t L ||grad f|| + 6 t n^{3/2} M
  double mu_tilde_slack = 0.0;
  double grad_G_op = 0.0;        // max_k ||d_k G||_op, finite differences
  double grad_G_bound = 0.0;     // 4 t M
  double grad_G_slack = 0.0;

  bool holds() const;
};

/// Evaluates the G eigenvalue envelope (3/4, 4/3), the mu~ norm bound and
/// the d_k G bound at (x, t). Requires t <= interpolation_time_limit(p).
EnvelopeReport check_lemma4(const Potential& p, ConstVectorRef x, double t);

/// Brownian increments on a uniform grid of `steps` cells over [0, t_end].
struct BrownianPath {
  double t_end = 0.0;
  Matrix increments;  // n x steps

  int steps() const { return static_cast<int>(increments.cols()); }
  int dimension() const { return static_cast<int>(increments.rows()); }
};

BrownianPath sample_brownian_path(int n, double t_end, int steps, CounterRng& rng);
BrownianPath zero_brownian_path(int n, double t_end, int steps);

enum class SdeScheme { euler_maruyama, milstein };

struct SdeVerification {
  std::vector<int> substeps;
  std::vector<double> errors;  // max over grid times of ||X_exact - X_scheme||
  std::vector<double> ratios;  // errors[i-1] / errors[i]
  bool monotone = true;        // errors strictly decrease with refinement
};

/// Compares the implicit-equation solution X_t (exact given W) with a
/// discretisation of the SDE above, driven by the same path. Each substep
/// count must divide path.steps().
///
/// Euler-Maruyama is strong order 1 when G does not depend on x and order
/// 1/2 otherwise. The Milstein scheme adds the (1/2) sigma sigma'
/// (dW^2 - dt) correction, restoring order 1 in one dimension (for n > 1
/// it is only accepted when M = 0, where it coincides with Euler-Maruyama).
SdeVerification verify_sde_representation(
    const Potential& p, ConstVectorRef x0, double t_end,
    const std::vector<int>& substeps, const BrownianPath& path,
    SdeScheme scheme = SdeScheme::euler_maruyama);

/// Draws the path from stream `path_index` of `seed` on the finest grid.
SdeVerification verify_sde_representation(
    const Potential& p, ConstVectorRef x0, double t_end,
    const std::vector<int>& substeps, std::uint64_t seed,
    std::uint64_t path_index = 0,
    SdeScheme scheme = SdeScheme::euler_maruyama);

struct SdeStudy {
  std::vector<SdeVerification> paths;

  double fraction_monotone() const;
  /// Share of paths whose every halving ratio lies in [lo, hi].
  double fraction_ratios_within(double lo, double hi) const;
};

/// Independent paths (stream i for path i), run on up to `threads` workers.
SdeStudy run_sde_study(const Potential& p, ConstVectorRef x0, double t_end,
                       const std::vector<int>& substeps, int n_paths,
                       std::uint64_t seed, SdeScheme scheme, int threads = 0);

}  // namespace pla::sde
