#pragma once

#include <optional>
#include <span>
#include <vector>

namespace pla::theory {

// Closed forms for Gaussian targets N(0, Sigma) in the eigenbasis of Sigma,
// plus calculators for the PLA convergence bounds. Divergent quantities are
// reported as +infinity rather than thrown.

using Spectrum = std::span<const double>;

/// Stationary covariance eigenvalues of PLA: lambda / (1 + eps / (2 lambda)).
std::vector<double> pla_limit_gaussian(Spectrum eigs, double eps);

/// Stationary covariance of ULA, lambda / (1 - eps / (2 lambda)); empty when
/// eps >= 2 min(lambda) (no stationary law).
std::optional<std::vector<double>> ula_limit_gaussian(Spectrum eigs, double eps);

/// Closed-form KL bias 1/2 sum(x_i - log(1 + x_i)), x_i = eps / (2 lambda_i).
///
/// This expression is KL(nu || nu_eps): it equals
/// gaussian_kl(eigs, pla_limit_gaussian(eigs, eps)). The forward divergence
/// KL(nu_eps || nu) has the same eps^2 term but a different eps^3 term.
double kl_bias_pla(Spectrum eigs, double eps);

/// 1/2 sum(-x_i - log(1 - x_i)); +infinity when eps >= 2 min(lambda).
double kl_bias_ula(Spectrum eigs, double eps);

struct ExpansionFit {
  double pla_c2 = 0.0, pla_c3 = 0.0;
  double ula_c2 = 0.0, ula_c3 = 0.0;
  double expected_c2 = 0.0;  // (1/16) sum lambda^-2
  double expected_c3 = 0.0;  // (1/48) sum lambda^-3; PLA takes the minus sign
  double max_relative_error = 0.0;
  bool within_tolerance = false;  // all four within 5 %
};

/// Least-squares fit of c2 eps^2 + c3 eps^3 to both closed-form biases.
/// eps_grid must lie in (0, 0.1 min(lambda)] and hold >= 2 distinct values.
ExpansionFit kl_bias_expansion_check(Spectrum eigs, Spectrum eps_grid);

/// Parameters of the KL convergence bound under alpha-LSI and
/// (L, M)-smoothness.
struct BoundParams {
  double alpha = 1.0;
  double L = 1.0;
  double M = 0.0;
  int n = 1;
  double eps = 0.01;
  long k = 0;
  double H0 = 0.0;

  /// Throws PreconditionError unless eps <= kl_step_ceiling.
  void validate() const;
};

/// min{1/(8L), 1/M, 3 alpha / (32 L^2)} (the 1/M term is dropped when M = 0).
double kl_step_ceiling(double alpha, double L, double M);

/// exp(-alpha eps k) H0 + 34 eps^2 n (L^3 + 9 n^2 M^2) / alpha.
double kl_bound_thm1(const BoundParams& bp);

/// One-step recurrence exp(-alpha eps) H + 32 eps^3 n (L^3 + 9 n^2 M^2).
/// Uses alpha, L, M, n, eps from bp.
double kl_one_step_bound(const BoundParams& bp, double H_prev);

struct Budget {
  double eps = 0.0;
  long k = 0;
  bool clamped = false;  // eps was cut to the step-size ceiling
  double bound = 0.0;    // kl_bound_thm1 at (eps, k), always <= delta
};

/// Step size making the bias term delta/2 and iteration count making the
/// decay term <= delta/2.
Budget budget_cor2(double alpha, double L, double M, int n, double delta,
                   double H0);

/// Renyi bias of PLA for nu = N(0, I/alpha):
/// n/(2(q-1)) (q log(1 + eps alpha/2) - log(1 + q eps alpha/2)).
/// For |q - 1| < 1e-6 the KL limit is used.
double renyi_bias_pla(int n, double alpha, double eps, double q);

/// ULA analogue; +infinity for q >= 2/(eps alpha).
double renyi_bias_ula(int n, double alpha, double eps, double q);

struct RenyiBoundParams {
  double beta = 1.0;  // isoperimetry constant of nu_eps
  double q = 2.0;
  double eps = 0.01;
  long k = 0;
  double R0 = 0.0;    // R_{2q, nu_eps}(rho_0)
  double bias = 0.0;  // order 2q-1 bias, supplied by the caller
  double L = 0.0;     // smoothness of f; 0 skips the eps < 1/L check

  void validate() const;
};

/// ((q - 1/2)/(q - 1)) R0 exp(-beta eps k / (2q)) + bias.
double renyi_bound_lsi(const RenyiBoundParams& rp);

struct PoincareBound {
  enum class Phase { linear, exponential };
  Phase phase = Phase::exponential;
  double k0 = 0.0;
  /// linear phase: R0 - beta eps k / (2q), a bound on R_{2q, nu_eps}(rho_k);
  /// exponential phase: the bound on R_{q, nu}(rho_k).
  double value = 0.0;
};

/// k0 = (2q / (beta eps)) (R0 - 1), floored at 0; for k >= k0 the bound is
/// ((q - 1/2)/(q - 1)) exp(-beta eps (k - k0) / (2q)) + bias.
PoincareBound renyi_bound_poincare(const RenyiBoundParams& rp);

/// sup{eps : renyi_bias_pla(n, alpha, eps, 2q - 1) <= delta}, isotropic
/// Gaussian only, by bisection.
double renyi_step_sup_isotropic(int n, double alpha, double q, double delta);

/// KL(N(0, diag(rho)) || N(0, diag(nu))) for commuting covariances given as
/// matching eigenvalue lists.
double gaussian_kl(Spectrum eig_rho, Spectrum eig_nu);

/// As above with means (coordinates in the shared eigenbasis).
double gaussian_kl(Spectrum mean_rho, Spectrum eig_rho, Spectrum mean_nu,
                   Spectrum eig_nu);

/// Renyi divergence of order q of N(0, rho) from N(0, nu); +infinity when
/// the integral diverges.
double gaussian_renyi(double q, Spectrum eig_rho, Spectrum eig_nu);

/// 2-Wasserstein distance between commuting Gaussians.
double gaussian_w2(Spectrum mean_rho, Spectrum eig_rho, Spectrum mean_nu,
                   Spectrum eig_nu);

/// Covariance eigenvalues of x_k along PLA: s <- a^2 (s + 2 eps),
/// a = 1 / (1 + eps / lambda). An empty `initial` means a point mass.
std::vector<double> gaussian_cov_recursion(Spectrum eigs, double eps, long k,
                                           Spectrum initial = {});

/// One step of the recursion above.
std::vector<double> gaussian_cov_step(Spectrum eigs, double eps,
                                      Spectrum current);

/// log-Sobolev constant of N(0, diag(eigs)), 1 / max(eigs).
double gaussian_lsi_constant(Spectrum eigs);

/// x - log(1 + x), accurate near 0.
double x_minus_log1p(double x);

}  // namespace pla::theory
