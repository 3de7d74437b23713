#include "pla/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pla/errors.hpp"

namespace pla::theory {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_spectrum(Spectrum eigs) {
  if (eigs.empty()) throw PreconditionError("spectrum must be non-empty");
  for (double l : eigs) {
    if (!(l > 0.0) || !std::isfinite(l)) {
      throw PreconditionError("spectrum entries must be positive and finite");
    }
  }
}

void require_eps(double eps) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) {
    throw PreconditionError("step size must be non-negative and finite");
  }
}

void require_same_size(Spectrum a, Spectrum b) {
  if (a.size() != b.size()) throw PreconditionError("spectra differ in length");
}

double min_of(Spectrum s) { return *std::min_element(s.begin(), s.end()); }

}  // namespace

double x_minus_log1p(double x) {
  if (std::abs(x) < 0.05) {
    // sum_{k>=2} (-1)^k x^k / k; 30 terms leave < 1e-40 relative remainder.
    double term = x * x;
    double sum = 0.0;
    for (int k = 2; k < 32; ++k) {
      sum += (k % 2 == 0 ? term : -term) / k;
      term *= x;
    }
    return sum;
  }
  return x - std::log1p(x);
}

std::vector<double> pla_limit_gaussian(Spectrum eigs, double eps) {
  require_spectrum(eigs);
  require_eps(eps);
  std::vector<double> out;
  out.reserve(eigs.size());
  for (double l : eigs) out.push_back(l / (1.0 + eps / (2.0 * l)));
  return out;
}

std::optional<std::vector<double>> ula_limit_gaussian(Spectrum eigs, double eps) {
  require_spectrum(eigs);
  require_eps(eps);
  if (eps >= 2.0 * min_of(eigs)) return std::nullopt;
  std::vector<double> out;
  out.reserve(eigs.size());
  for (double l : eigs) out.push_back(l / (1.0 - eps / (2.0 * l)));
  return out;
}

double kl_bias_pla(Spectrum eigs, double eps) {
  require_spectrum(eigs);
  require_eps(eps);
  double sum = 0.0;
  for (double l : eigs) sum += x_minus_log1p(eps / (2.0 * l));
  return 0.5 * sum;
}

double kl_bias_ula(Spectrum eigs, double eps) {
  require_spectrum(eigs);
  require_eps(eps);
  if (eps >= 2.0 * min_of(eigs)) return kInf;
  double sum = 0.0;
  for (double l : eigs) sum += x_minus_log1p(-eps / (2.0 * l));
  return 0.5 * sum;
}

ExpansionFit kl_bias_expansion_check(Spectrum eigs, Spectrum eps_grid) {
  require_spectrum(eigs);
  const double cap = 0.1 * min_of(eigs);
  std::vector<double> grid(eps_grid.begin(), eps_grid.end());
  for (double e : grid) {
    if (!(e > 0.0) || e > cap * (1.0 + 1e-12)) {
      throw PreconditionError("expansion check: eps grid must lie in (0, 0.1 min lambda]");
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.size() < 2) {
    throw PreconditionError("expansion check: need at least two distinct eps values");
  }

  // bias / eps^2 = c2 + c3 eps is an ordinary straight-line fit.
  auto fit = [&](auto bias_fn, double& c2, double& c3) {
    double se = 0.0, sy = 0.0, see = 0.0, sey = 0.0;
    const double m = static_cast<double>(grid.size());
    for (double e : grid) {
      const double y = bias_fn(e) / (e * e);
      se += e;
      sy += y;
      see += e * e;
      sey += e * y;
    }
    const double denom = m * see - se * se;
    if (!(std::abs(denom) > 0.0)) throw PreconditionError("expansion check: degenerate grid");
    c3 = (m * sey - se * sy) / denom;
    c2 = (sy - c3 * se) / m;
  };

  ExpansionFit out;
  fit([&](double e) { return kl_bias_pla(eigs, e); }, out.pla_c2, out.pla_c3);
  fit([&](double e) { return kl_bias_ula(eigs, e); }, out.ula_c2, out.ula_c3);
  for (double l : eigs) {
    out.expected_c2 += 1.0 / (16.0 * l * l);
    out.expected_c3 += 1.0 / (48.0 * l * l * l);
  }
  const double errs[] = {
      std::abs(out.pla_c2 - out.expected_c2) / out.expected_c2,
      std::abs(out.ula_c2 - out.expected_c2) / out.expected_c2,
      std::abs(out.pla_c3 + out.expected_c3) / out.expected_c3,
      std::abs(out.ula_c3 - out.expected_c3) / out.expected_c3};
  out.max_relative_error = *std::max_element(std::begin(errs), std::end(errs));
  out.within_tolerance = out.max_relative_error <= 0.05;
  return out;
}

// ---------------------------------------------------------------------------
// KL bound

double kl_step_ceiling(double alpha, double L, double M) {
  double c = std::min(1.0 / (8.0 * L), 3.0 * alpha / (32.0 * L * L));
  if (M > 0.0) c = std::min(c, 1.0 / M);
  return c;
}

void BoundParams::validate() const {
  if (!(alpha > 0.0) || !(L > 0.0) || !(M >= 0.0) || n < 1) {
    throw PreconditionError("bound: need alpha > 0, L > 0, M >= 0, n >= 1");
  }
  if (!(eps > 0.0)) throw PreconditionError("bound: eps must be > 0");
  if (k < 0) throw PreconditionError("bound: k must be >= 0");
  if (!(H0 >= 0.0)) throw PreconditionError("bound: H0 must be >= 0");
  const double ceiling = kl_step_ceiling(alpha, L, M);
  if (eps > ceiling * (1.0 + 1e-12)) {
    throw PreconditionError("bound: eps = " + std::to_string(eps) +
                            " exceeds the step-size ceiling " +
                            std::to_string(ceiling));
  }
}

namespace {

double smoothness_load(const BoundParams& bp) {
  const double n = bp.n;
  return n * (bp.L * bp.L * bp.L + 9.0 * n * n * bp.M * bp.M);
}

}  // namespace

double kl_bound_thm1(const BoundParams& bp) {
  bp.validate();
  const double decay = bp.H0 == 0.0
                           ? 0.0
                           : std::exp(-bp.alpha * bp.eps * static_cast<double>(bp.k)) * bp.H0;
  return decay + 34.0 * bp.eps * bp.eps * smoothness_load(bp) / bp.alpha;
}

double kl_one_step_bound(const BoundParams& bp, double H_prev) {
  bp.validate();
  return std::exp(-bp.alpha * bp.eps) * H_prev +
         32.0 * bp.eps * bp.eps * bp.eps * smoothness_load(bp);
}

Budget budget_cor2(double alpha, double L, double M, int n, double delta,
                   double H0) {
  if (!(delta > 0.0)) throw PreconditionError("budget: delta must be > 0");
  if (!(H0 >= 0.0) || !std::isfinite(H0)) {
    throw PreconditionError("budget: H0 must be finite and >= 0");
  }
  BoundParams bp{alpha, L, M, n, 1.0, 0, H0};
  if (!(alpha > 0.0) || !(L > 0.0) || !(M >= 0.0) || n < 1) {
    throw PreconditionError("budget: need alpha > 0, L > 0, M >= 0, n >= 1");
  }
  Budget out;
  out.eps = std::sqrt(alpha * delta / (68.0 * smoothness_load(bp)));
  const double ceiling = kl_step_ceiling(alpha, L, M);
  if (out.eps > ceiling) {
    out.eps = ceiling;
    out.clamped = true;
  }
  out.k = H0 <= delta / 2.0
              ? 0
              : static_cast<long>(std::ceil(std::log(2.0 * H0 / delta) / (alpha * out.eps)));
  bp.eps = out.eps;
  bp.k = out.k;
  out.bound = kl_bound_thm1(bp);
  // Rounding can leave the sum an ulp above delta; a few more iterations
  // absorb it.
  for (int guard = 0; out.bound > delta && guard < 64; ++guard) {
    bp.k = ++out.k;
    out.bound = kl_bound_thm1(bp);
  }
  if (out.bound > delta) {
    out.eps = std::nextafter(out.eps, 0.0);
    bp.eps = out.eps;
    out.bound = kl_bound_thm1(bp);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Renyi

namespace {

void require_renyi_args(int n, double alpha, double eps, double q) {
  if (n < 1 || !(alpha > 0.0)) throw PreconditionError("renyi: need n >= 1, alpha > 0");
  require_eps(eps);
  if (!(q >= 1.0)) throw PreconditionError("renyi: order q must be > 1");
}

}  // namespace

double renyi_bias_pla(int n, double alpha, double eps, double q) {
  require_renyi_args(n, alpha, eps, q);
  const double x = eps * alpha / 2.0;
  if (std::abs(q - 1.0) < 1e-6) {
    return 0.5 * n * (std::log1p(x) - x / (1.0 + x));
  }
  return n / (2.0 * (q - 1.0)) * (q * std::log1p(x) - std::log1p(q * x));
}

double renyi_bias_ula(int n, double alpha, double eps, double q) {
  require_renyi_args(n, alpha, eps, q);
  const double x = eps * alpha / 2.0;
  if (eps > 0.0 && q >= 2.0 / (eps * alpha)) return kInf;
  if (std::abs(q - 1.0) < 1e-6) {
    return 0.5 * n * (x / (1.0 - x) + std::log1p(-x));
  }
  return n / (2.0 * (q - 1.0)) * (q * std::log1p(-x) - std::log1p(-q * x));
}

void RenyiBoundParams::validate() const {
  if (!(beta > 0.0)) throw PreconditionError("renyi bound: beta must be > 0");
  if (!(q > 1.0)) throw PreconditionError("renyi bound: q must be > 1");
  if (!(eps > 0.0)) throw PreconditionError("renyi bound: eps must be > 0");
  if (k < 0) throw PreconditionError("renyi bound: k must be >= 0");
  if (!(R0 >= 0.0) || !(bias >= 0.0)) {
    throw PreconditionError("renyi bound: R0 and bias must be >= 0");
  }
  if (!(eps < 1.0 / (2.0 * beta))) {
    throw PreconditionError("renyi bound: need eps < 1/(2 beta)");
  }
  if (L > 0.0 && !(eps < 1.0 / L)) {
    throw PreconditionError("renyi bound: need eps < 1/L");
  }
}

double renyi_bound_lsi(const RenyiBoundParams& rp) {
  rp.validate();
  const double coef = (rp.q - 0.5) / (rp.q - 1.0);
  return coef * rp.R0 *
             std::exp(-rp.beta * rp.eps * static_cast<double>(rp.k) / (2.0 * rp.q)) +
         rp.bias;
}

PoincareBound renyi_bound_poincare(const RenyiBoundParams& rp) {
  rp.validate();
  PoincareBound out;
  const double rate = rp.beta * rp.eps / (2.0 * rp.q);
  out.k0 = std::max(0.0, (rp.R0 - 1.0) / rate);
  const double k = static_cast<double>(rp.k);
  if (k < out.k0) {
    out.phase = PoincareBound::Phase::linear;
    out.value = rp.R0 - rate * k;
  } else {
    out.phase = PoincareBound::Phase::exponential;
    out.value = (rp.q - 0.5) / (rp.q - 1.0) * std::exp(-rate * (k - out.k0)) + rp.bias;
  }
  return out;
}

double renyi_step_sup_isotropic(int n, double alpha, double q, double delta) {
  if (!(delta > 0.0)) throw PreconditionError("step sup: delta must be > 0");
  if (!(q > 1.0)) throw PreconditionError("step sup: q must be > 1");
  const double order = 2.0 * q - 1.0;
  auto bias = [&](double e) { return renyi_bias_pla(n, alpha, e, order); };
  double lo = 0.0;
  double hi = 1.0 / alpha;
  while (bias(hi) <= delta) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) return kInf;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (bias(mid) <= delta ? lo : hi) = mid;
  }
  return lo;
}

// ---------------------------------------------------------------------------
// Gaussian divergences

double gaussian_kl(Spectrum eig_rho, Spectrum eig_nu) {
  require_spectrum(eig_rho);
  require_spectrum(eig_nu);
  require_same_size(eig_rho, eig_nu);
  double sum = 0.0;
  for (std::size_t i = 0; i < eig_rho.size(); ++i) {
    sum += x_minus_log1p(eig_rho[i] / eig_nu[i] - 1.0);
  }
  return 0.5 * sum;
}

double gaussian_kl(Spectrum mean_rho, Spectrum eig_rho, Spectrum mean_nu,
                   Spectrum eig_nu) {
  require_same_size(mean_rho, eig_rho);
  require_same_size(mean_nu, eig_nu);
  double shift = 0.0;
  for (std::size_t i = 0; i < mean_rho.size(); ++i) {
    const double d = mean_rho[i] - mean_nu[i];
    shift += d * d / eig_nu[i];
  }
  return gaussian_kl(eig_rho, eig_nu) + 0.5 * shift;
}

double gaussian_renyi(double q, Spectrum eig_rho, Spectrum eig_nu) {
  require_spectrum(eig_rho);
  require_spectrum(eig_nu);
  require_same_size(eig_rho, eig_nu);
  if (!(q > 0.0)) throw PreconditionError("renyi: order must be > 0");
  if (q == 1.0) return gaussian_kl(eig_rho, eig_nu);
  double log_integral = 0.0;
  for (std::size_t i = 0; i < eig_rho.size(); ++i) {
    const double r = eig_rho[i] / eig_nu[i];
    const double c = 1.0 + q * (1.0 / r - 1.0);
    if (!(c > 0.0)) return kInf;
    log_integral += -0.5 * q * std::log(r) - 0.5 * std::log(c);
  }
  return log_integral / (q - 1.0);
}

double gaussian_w2(Spectrum mean_rho, Spectrum eig_rho, Spectrum mean_nu,
                   Spectrum eig_nu) {
  require_spectrum(eig_rho);
  require_spectrum(eig_nu);
  require_same_size(eig_rho, eig_nu);
  require_same_size(mean_rho, eig_rho);
  require_same_size(mean_nu, eig_nu);
  double sum = 0.0;
  for (std::size_t i = 0; i < eig_rho.size(); ++i) {
    const double dm = mean_rho[i] - mean_nu[i];
    const double ds = std::sqrt(eig_rho[i]) - std::sqrt(eig_nu[i]);
    sum += dm * dm + ds * ds;
  }
  return std::sqrt(sum);
}

std::vector<double> gaussian_cov_step(Spectrum eigs, double eps, Spectrum current) {
  require_same_size(eigs, current);
  std::vector<double> next(eigs.size());
  for (std::size_t i = 0; i < eigs.size(); ++i) {
    const double a = 1.0 / (1.0 + eps / eigs[i]);
    next[i] = a * a * (current[i] + 2.0 * eps);
  }
  return next;
}

std::vector<double> gaussian_cov_recursion(Spectrum eigs, double eps, long k,
                                           Spectrum initial) {
  require_spectrum(eigs);
  require_eps(eps);
  if (k < 0) throw PreconditionError("recursion: k must be >= 0");
  std::vector<double> s(eigs.size(), 0.0);
  if (!initial.empty()) {
    require_same_size(eigs, initial);
    s.assign(initial.begin(), initial.end());
  }
  for (long step = 0; step < k; ++step) s = gaussian_cov_step(eigs, eps, s);
  return s;
}

double gaussian_lsi_constant(Spectrum eigs) {
  require_spectrum(eigs);
  return 1.0 / *std::max_element(eigs.begin(), eigs.end());
}

}  // namespace pla::theory
