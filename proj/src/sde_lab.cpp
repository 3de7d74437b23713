#include "pla/sde_lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "pla/errors.hpp"
#include "pla/samplers.hpp"

namespace pla::sde {

namespace {

struct Resolvent {
  Matrix S;  // (I + t H)^{-1}
  Matrix G;  // S^2
};

Resolvent resolvent(const Potential& p, ConstVectorRef x, double t) {
  const int n = p.dimension();
  Matrix B = Matrix::Identity(n, n) + t * p.hessian(x);
  B = 0.5 * (B + B.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(B);
  const Vector d = es.eigenvalues();
  const double scale = d.cwiseAbs().maxCoeff();
  if (!(d.cwiseAbs().minCoeff() > 1e-12 * scale)) {
    throw SingularError("I + t hess f(x) is singular");
  }
  Resolvent r;
  r.S = es.eigenvectors() * d.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  r.G = es.eigenvectors() * d.cwiseInverse().cwiseAbs2().asDiagonal() *
        es.eigenvectors().transpose();
  return r;
}

void require_third(const Potential& p) {
  if (!p.has_third_derivatives()) {
    throw CapabilityError("interpolation quantities need analytic third derivatives");
  }
}

void require_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw PreconditionError("interpolation time must be finite and >= 0");
  }
}

}  // namespace

Matrix gradient_of_G(const Potential& p, ConstVectorRef x, double t, int k) {
  require_third(p);
  require_time(t);
  const Resolvent r = resolvent(p, x, t);
  const Matrix T = p.third_directional(x, k);
  return -t * (r.S * T * r.G + r.G * T * r.S);
}

Matrix gradient_of_G_fd(const Potential& p, ConstVectorRef x, double t, int k,
                        double h) {
  require_time(t);
  if (k < 0 || k >= p.dimension()) throw PreconditionError("coordinate out of range");
  Vector plus = x, minus = x;
  plus[k] += h;
  minus[k] -= h;
  return (resolvent(p, plus, t).G - resolvent(p, minus, t).G) / (2.0 * h);
}

InterpolationQuantities interpolation_quantities(const Potential& p,
                                                 ConstVectorRef x, double t,
                                                 DivergenceMode mode,
                                                 double fd_step) {
  require_third(p);
  require_time(t);
  const int n = p.dimension();
  if (x.size() != n) throw PreconditionError("point has wrong dimension");

  InterpolationQuantities q;
  q.t = t;
  const Resolvent r = resolvent(p, x, t);
  q.sqrtG = r.S;
  q.G = r.G;
  const Vector grad = p.gradient(x);
  const Matrix H = p.hessian(x);

  Vector trace_term(n);
  std::vector<Matrix> slices;
  slices.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    slices.push_back(p.third_directional(x, i));
    trace_term[i] = slices.back().cwiseProduct(q.G).sum();
  }
  q.mu = -q.sqrtG * (grad + t * trace_term);

  q.div_G = Vector::Zero(n);
  if (mode == DivergenceMode::analytic) {
    for (int k = 0; k < n; ++k) {
      const Matrix dG = -t * (r.S * slices[static_cast<std::size_t>(k)] * r.G +
                              r.G * slices[static_cast<std::size_t>(k)] * r.S);
      q.div_G += dG.col(k);
    }
  } else {
    for (int k = 0; k < n; ++k) {
      q.div_G += gradient_of_G_fd(p, x, t, k, fd_step).col(k);
    }
    q.approximate = true;
  }

  // Same as mu - div G + G grad f, without the cancellation.
  q.mu_tilde = -t * (H * (q.G * grad)) - t * (q.sqrtG * trace_term) - q.div_G;
  return q;
}

double interpolation_time_limit(const Potential& p) {
  const auto M = p.smoothness_M();
  if (!M) throw PreconditionError("interpolation time limit needs a known M");
  double limit = 1.0 / (8.0 * p.smoothness_L());
  if (*M > 0.0) limit = std::min(limit, 1.0 / *M);
  return limit;
}

bool EnvelopeReport::holds() const {
  return eig_lower_slack > 0.0 && eig_upper_slack > 0.0 &&
         mu_tilde_slack >= 0.0 && grad_G_slack >= 0.0;
}

EnvelopeReport check_lemma4(const Potential& p, ConstVectorRef x, double t) {
  require_time(t);
  const double limit = interpolation_time_limit(p);
  if (t > limit * (1.0 + 1e-12)) {
    throw PreconditionError("lemma 4 check needs t <= min{1/(8L), 1/M}");
  }
  const int n = p.dimension();
  const double L = p.smoothness_L();
  const double M = *p.smoothness_M();
  const InterpolationQuantities q = interpolation_quantities(p, x, t);

  EnvelopeReport rep;
  Eigen::SelfAdjointEigenSolver<Matrix> es(q.G, Eigen::EigenvaluesOnly);
  rep.G_min_eig = es.eigenvalues().minCoeff();
  rep.G_max_eig = es.eigenvalues().maxCoeff();
  rep.eig_lower_slack = rep.G_min_eig - 0.75;
  rep.eig_upper_slack = 4.0 / 3.0 - rep.G_max_eig;

  rep.mu_tilde_norm = q.mu_tilde.norm();
  rep.mu_tilde_bound = 4.0 / 3.0 * t * L * p.gradient(x).norm() +
                       6.0 * t * std::pow(static_cast<double>(n), 1.5) * M;
  rep.mu_tilde_slack = rep.mu_tilde_bound - rep.mu_tilde_norm;

  for (int k = 0; k < n; ++k) {
    rep.grad_G_op = std::max(rep.grad_G_op,
                             symmetric_op_norm(gradient_of_G_fd(p, x, t, k)));
  }
  rep.grad_G_bound = 4.0 * t * M;
  rep.grad_G_slack = rep.grad_G_bound - rep.grad_G_op;
  return rep;
}

BrownianPath sample_brownian_path(int n, double t_end, int steps, CounterRng& rng) {
  if (steps < 1 || n < 1) throw PreconditionError("brownian path: need n, steps >= 1");
  BrownianPath path = zero_brownian_path(n, t_end, steps);
  const double scale = std::sqrt(t_end / steps);
  for (int j = 0; j < steps; ++j) {
    for (int i = 0; i < n; ++i) path.increments(i, j) = scale * rng.normal();
  }
  return path;
}

BrownianPath zero_brownian_path(int n, double t_end, int steps) {
  if (!(t_end >= 0.0)) throw PreconditionError("brownian path: t_end must be >= 0");
  BrownianPath path;
  path.t_end = t_end;
  path.increments = Matrix::Zero(n, steps);
  return path;
}

SdeVerification verify_sde_representation(const Potential& p, ConstVectorRef x0,
                                          double t_end,
                                          const std::vector<int>& substeps,
                                          const BrownianPath& path,
                                          SdeScheme scheme) {
  require_third(p);
  require_time(t_end);
  const int n = p.dimension();
  if (x0.size() != n || path.dimension() != n) {
    throw PreconditionError("sde verify: dimension mismatch");
  }
  if (t_end > interpolation_time_limit(p) * (1.0 + 1e-12)) {
    throw PreconditionError("sde verify: t_end must be <= min{1/(8L), 1/M}");
  }
  if (path.t_end != t_end) throw PreconditionError("sde verify: path horizon differs");
  if (substeps.empty()) throw PreconditionError("sde verify: no substep counts");
  const int fine = path.steps();
  for (int m : substeps) {
    if (m < 1 || fine % m != 0) {
      throw PreconditionError("sde verify: substep counts must divide the path grid");
    }
  }
  if (scheme == SdeScheme::milstein && n > 1 && *p.smoothness_M() != 0.0) {
    throw PreconditionError("sde verify: Milstein needs n = 1 or constant Hessian");
  }

  // Exact process on the fine grid: X solves X + t grad f(X) = x0 + sqrt2 W_t.
  ProxConfig exact_cfg;
  exact_cfg.tol = 1e-13;
  exact_cfg.max_iter = 200;
  std::vector<Vector> exact(static_cast<std::size_t>(fine) + 1);
  exact[0] = x0;
  Vector W = Vector::Zero(n);
  const double fine_dt = t_end / fine;
  for (int j = 1; j <= fine; ++j) {
    W += path.increments.col(j - 1);
    const double t = fine_dt * j;
    const Vector y = x0 + std::sqrt(2.0) * W;
    exact[static_cast<std::size_t>(j)] = t > 0.0 ? prox_step(p, y, t, exact_cfg).x : y;
  }

  SdeVerification out;
  out.substeps = substeps;
  Matrix third(1, 1);
  for (int m : substeps) {
    const int stride = fine / m;
    const double dt = t_end / m;
    Vector x = x0;
    double err = 0.0;
    for (int j = 0; j < m; ++j) {
      const double t = dt * j;
      Vector dW = Vector::Zero(n);
      for (int s = 0; s < stride; ++s) dW += path.increments.col(j * stride + s);
      const InterpolationQuantities q = interpolation_quantities(p, x, t);
      Vector next = x + q.mu * dt + std::sqrt(2.0) * (q.sqrtG * dW);
      if (scheme == SdeScheme::milstein && n == 1) {
        p.third_directional_into(x, 0, third);
        const double s = q.sqrtG(0, 0);
        next[0] += -t * third(0, 0) * s * s * s * (dW[0] * dW[0] - dt);
      }
      x = std::move(next);
      err = std::max(err, (x - exact[static_cast<std::size_t>((j + 1) * stride)]).norm());
    }
    out.errors.push_back(err);
  }
  for (std::size_t i = 1; i < out.errors.size(); ++i) {
    const double prev = out.errors[i - 1], cur = out.errors[i];
    out.ratios.push_back(cur > 0.0 ? prev / cur
                                   : std::numeric_limits<double>::quiet_NaN());
    if (!(cur < prev) && !(cur == 0.0 && prev == 0.0)) out.monotone = false;
  }
  return out;
}

SdeVerification verify_sde_representation(const Potential& p, ConstVectorRef x0,
                                          double t_end,
                                          const std::vector<int>& substeps,
                                          std::uint64_t seed,
                                          std::uint64_t path_index,
                                          SdeScheme scheme) {
  if (substeps.empty()) throw PreconditionError("sde verify: no substep counts");
  const int fine = *std::max_element(substeps.begin(), substeps.end());
  CounterRng rng(seed, path_index);
  const BrownianPath path = sample_brownian_path(p.dimension(), t_end, std::max(fine, 1), rng);
  return verify_sde_representation(p, x0, t_end, substeps, path, scheme);
}

double SdeStudy::fraction_monotone() const {
  if (paths.empty()) return 0.0;
  const auto ok = std::count_if(paths.begin(), paths.end(),
                                [](const SdeVerification& v) { return v.monotone; });
  return static_cast<double>(ok) / static_cast<double>(paths.size());
}

double SdeStudy::fraction_ratios_within(double lo, double hi) const {
  if (paths.empty()) return 0.0;
  const auto ok = std::count_if(paths.begin(), paths.end(), [&](const SdeVerification& v) {
    return std::all_of(v.ratios.begin(), v.ratios.end(),
                       [&](double r) { return r >= lo && r <= hi; });
  });
  return static_cast<double>(ok) / static_cast<double>(paths.size());
}

SdeStudy run_sde_study(const Potential& p, ConstVectorRef x0, double t_end,
                       const std::vector<int>& substeps, int n_paths,
                       std::uint64_t seed, SdeScheme scheme, int threads) {
  if (n_paths < 1) throw PreconditionError("sde study: need at least one path");
  SdeStudy study;
  study.paths.resize(static_cast<std::size_t>(n_paths));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_paths));
  const Vector start = x0;
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < n_paths; i = next++) {
      try {
        study.paths[static_cast<std::size_t>(i)] = verify_sde_representation(
            p, start, t_end, substeps, seed, static_cast<std::uint64_t>(i), scheme);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  const int workers = std::min(resolve_thread_count(threads), n_paths);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return study;
}

}  // namespace pla::sde
