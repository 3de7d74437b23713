#include "pla/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "pla/errors.hpp"
#include "pla/rng.hpp"

namespace pla {

namespace {

constexpr long kLeaf = 64;

// Pairwise sum over rows [lo, hi) of term(row), accumulated into `out`.
template <typename Term>
void pairwise(long lo, long hi, Matrix& out, const Term& term) {
  if (hi - lo <= kLeaf) {
    out.setZero();
    for (long r = lo; r < hi; ++r) term(r, out);
    return;
  }
  const long mid = lo + (hi - lo) / 2;
  Matrix right(out.rows(), out.cols());
  pairwise(lo, mid, out, term);
  pairwise(mid, hi, right, term);
  out += right;
}

}  // namespace

EmpiricalMoments moments(ConstMatrixRef samples) {
  const long N = samples.rows();
  const int n = static_cast<int>(samples.cols());
  if (N < 2) throw PreconditionError("moments need at least 2 samples");
  if (n < 1) throw PreconditionError("moments need dimension >= 1");

  Matrix sum(n, 1);
  pairwise(0, N, sum, [&](long r, Matrix& acc) { acc += samples.row(r).transpose(); });
  EmpiricalMoments em;
  em.count = N;
  em.mean = sum.col(0) / static_cast<double>(N);

  Matrix second(n, n);
  pairwise(0, N, second, [&](long r, Matrix& acc) {
    const Vector d = samples.row(r).transpose() - em.mean;
    acc.noalias() += d * d.transpose();
  });
  em.cov = second / static_cast<double>(N - 1);
  em.cov = 0.5 * (em.cov + em.cov.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Matrix> es(em.cov);
  Vector d = es.eigenvalues();
  if (d.minCoeff() < -1e-10 * std::max(1.0, d.cwiseAbs().maxCoeff())) {
    throw Error("sample covariance has a negative eigenvalue");
  }
  if (d.minCoeff() < 0.0) {
    d = d.cwiseMax(0.0);
    em.cov = es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
  }

  // Var of (x_i - m_i)(x_j - m_j) for the entry standard errors.
  Matrix fourth(n, n);
  pairwise(0, N, fourth, [&](long r, Matrix& acc) {
    const Vector dv = samples.row(r).transpose() - em.mean;
    const Matrix prod = dv * dv.transpose();
    acc += (prod - em.cov).cwiseAbs2();
  });
  em.cov_se = (fourth / static_cast<double>((N - 1) * N)).cwiseSqrt();
  em.mean_se = (em.cov.diagonal() / static_cast<double>(N)).cwiseSqrt();
  return em;
}

EmpiricalMoments moments(const Trace& trace) { return moments(trace.final_iterates()); }

double gaussian_fit_kl(const EmpiricalMoments& em, const GaussianTarget& target) {
  const int n = target.dimension();
  if (em.mean.size() != n || em.cov.rows() != n) {
    throw PreconditionError("fitted moments have the wrong dimension");
  }
  const Matrix& Q = target.basis();
  const Vector& lam = target.eigenvalues();
  const Matrix S = Q.transpose() * em.cov * Q;
  const Vector dm = Q.transpose() * (em.mean - target.mean());

  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
  const Vector s = es.eigenvalues();
  if (!(s.minCoeff() > 1e-300) || !(s.minCoeff() > 1e-14 * s.maxCoeff())) {
    throw SingularError("fitted covariance is singular");
  }
  double trace = 0.0, quad = 0.0, logdet_nu = 0.0;
  for (int i = 0; i < n; ++i) {
    trace += S(i, i) / lam[i];
    quad += dm[i] * dm[i] / lam[i];
    logdet_nu += std::log(lam[i]);
  }
  const double logdet_rho = s.array().log().sum();
  return std::max(0.0, 0.5 * (trace + quad - n + logdet_nu - logdet_rho));
}

BootstrapEstimate bootstrap_fit_kl(ConstMatrixRef samples, const GaussianTarget& target,
                                   int replicates, std::uint64_t seed) {
  if (replicates < 2) throw PreconditionError("bootstrap needs at least 2 replicates");
  const long N = samples.rows();
  BootstrapEstimate out;
  out.value = gaussian_fit_kl(moments(samples), target);
  out.replicates = replicates;

  std::vector<double> values(static_cast<std::size_t>(replicates));
  Matrix resampled(N, samples.cols());
  for (int b = 0; b < replicates; ++b) {
    CounterRng rng(seed, static_cast<std::uint64_t>(b));
    for (long r = 0; r < N; ++r) {
      const long idx = std::min(N - 1, static_cast<long>(rng.uniform() * static_cast<double>(N)));
      resampled.row(r) = samples.row(idx);
    }
    values[static_cast<std::size_t>(b)] = gaussian_fit_kl(moments(resampled), target);
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= replicates;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  out.se = std::sqrt(var / (replicates - 1));
  return out;
}

HistogramKl kl_vs_quadrature_1d(std::span<const double> samples, const Potential& p,
                                const HistogramGrid& grid) {
  if (p.dimension() != 1) throw PreconditionError("histogram KL needs a 1D target");
  const long N = static_cast<long>(samples.size());
  if (N < 2) throw PreconditionError("histogram KL needs at least 2 samples");
  if (!(grid.hi > grid.lo) || grid.subdivisions < 1) {
    throw PreconditionError("histogram grid must have hi > lo and subdivisions >= 1");
  }

  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= static_cast<double>(N);
  double var = 0.0;
  for (double s : samples) var += (s - mean) * (s - mean);
  const double sd = std::sqrt(var / static_cast<double>(N - 1));
  if (grid.lo > mean - 4.0 * sd || grid.hi < mean + 4.0 * sd) {
    throw PreconditionError("histogram grid must cover 4 standard deviations each side");
  }

  double width = 0.0;
  if (grid.bin_width) {
    width = *grid.bin_width;
  } else {
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double q) {
      const double pos = q * static_cast<double>(N - 1);
      const auto i = static_cast<std::size_t>(pos);
      const double frac = pos - static_cast<double>(i);
      return i + 1 < sorted.size() ? sorted[i] + frac * (sorted[i + 1] - sorted[i])
                                   : sorted[i];
    };
    width = 2.0 * (quantile(0.75) - quantile(0.25)) * std::cbrt(1.0 / static_cast<double>(N));
  }
  if (!(width > 0.0)) throw PreconditionError("histogram bin width must be positive");

  HistogramKl out;
  const double span = grid.hi - grid.lo;
  out.bins = std::max(1, static_cast<int>(std::ceil(span / width - 1e-9)));
  out.width = span / out.bins;

  std::vector<long> counts(static_cast<std::size_t>(out.bins), 0);
  long inside = 0;
  for (double s : samples) {
    if (s < grid.lo || s > grid.hi) {
      ++out.outside;
      continue;
    }
    const int b = std::min(out.bins - 1, static_cast<int>((s - grid.lo) / out.width));
    ++counts[static_cast<std::size_t>(b)];
    ++inside;
  }

  // Target mass per bin, shifted by the grid minimum of f to avoid underflow.
  const int panels = grid.subdivisions;
  const int nodes = out.bins * panels + 1;
  const double h = span / (out.bins * panels);
  std::vector<double> f(static_cast<std::size_t>(nodes));
  Vector x(1);
  for (int j = 0; j < nodes; ++j) {
    x[0] = grid.lo + h * j;
    f[static_cast<std::size_t>(j)] = p.value(x);
  }
  const double fmin = *std::min_element(f.begin(), f.end());
  std::vector<double> q(static_cast<std::size_t>(out.bins), 0.0);
  double total = 0.0;
  for (int b = 0; b < out.bins; ++b) {
    double m = 0.0;
    for (int s = 0; s < panels; ++s) {
      const auto j = static_cast<std::size_t>(b * panels + s);
      m += 0.5 * h * (std::exp(fmin - f[j]) + std::exp(fmin - f[j + 1]));
    }
    q[static_cast<std::size_t>(b)] = m;
    total += m;
  }

  double kl = 0.0;
  for (int b = 0; b < out.bins; ++b) {
    const long c = counts[static_cast<std::size_t>(b)];
    if (c == 0) continue;
    ++out.occupied;
    double qb = q[static_cast<std::size_t>(b)] / total;
    if (qb <= 0.0) {
      qb = 1e-12;
      out.smoothed = true;
    }
    const double pb = static_cast<double>(c) / static_cast<double>(inside);
    kl += pb * std::log(pb / qb);
  }
  out.kl = std::max(0.0, kl);
  const double dof = std::max(0, out.occupied - 1);
  out.binning_floor = (dof + 3.0 * std::sqrt(2.0 * dof)) / (2.0 * static_cast<double>(inside));
  return out;
}

ScalingFit bias_scaling_fit(std::span<const double> eps, std::span<const double> bias) {
  if (eps.size() != bias.size()) throw PreconditionError("scaling fit: length mismatch");
  if (eps.size() < 4) throw PreconditionError("scaling fit needs at least 4 points");
  const auto m = static_cast<double>(eps.size());
  double sx = 0.0, sy = 0.0;
  std::vector<double> lx(eps.size()), ly(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0)) throw PreconditionError("scaling fit: eps must be positive");
    if (!(bias[i] > 0.0) || !std::isfinite(bias[i])) {
      throw PreconditionError("scaling fit: bias values must be positive and finite");
    }
    lx[i] = std::log(eps[i]);
    ly[i] = std::log(bias[i]);
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw PreconditionError("scaling fit: eps values must not all be equal");
  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.reliable = fit.r_squared >= 0.95;
  return fit;
}

}  // namespace pla
