#include "pla/prox.hpp"

#include <cmath>
#include <string>

#include "pla/errors.hpp"

namespace pla {

namespace {

constexpr double kMinRcond = 1e-12;
constexpr int kMaxHalvings = 40;

}  // namespace

void ProxConfig::validate() const {
  if (!(tol > 0.0)) throw PreconditionError("prox: tol must be > 0");
  if (max_iter < 1) throw PreconditionError("prox: max_iter must be >= 1");
}

double ProxConfig::effective_tol(ConstVectorRef y) const {
  return tol_mode == ToleranceMode::relative ? tol * (1.0 + y.norm()) : tol;
}

ProxWorkspace::ProxWorkspace(int n)
    : grad(n),
      residual(n),
      step(n),
      trial(n),
      trial_residual(n),
      jacobian(n, n),
      llt(n) {}

void check_prox_preconditions(const Potential& p, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw PreconditionError("prox: step size must be positive and finite");
  }
  if (!p.is_convex() && eps * p.smoothness_L() > 1.0) {
    throw PreconditionError("prox: eps = " + std::to_string(eps) +
                            " exceeds 1/L for a nonconvex potential");
  }
}

ProxStatus prox_solve_into(const Potential& p, ConstVectorRef y, double eps,
                           const ProxConfig& cfg, ProxWorkspace& ws,
                           VectorRef x) {
  check_prox_preconditions(p, eps);
  const double tol = cfg.effective_tol(y);
  const double gd_step = 1.0 / (1.0 + eps * p.smoothness_L());

  ProxStatus status;
  bool use_newton = cfg.solver == ProxSolver::newton;
  x = y;
  p.gradient_into(x, ws.grad);
  ws.residual = x + eps * ws.grad - y;
  double rnorm = ws.residual.norm();

  for (int it = 0; it < cfg.max_iter; ++it) {
    if (rnorm <= tol) break;
    ++status.iterations;

    if (use_newton) {
      p.hessian_into(x, ws.jacobian);
      ws.jacobian *= eps;
      ws.jacobian.diagonal().array() += 1.0;
      ws.llt.compute(ws.jacobian);
      if (ws.llt.info() != Eigen::Success || ws.llt.rcond() < kMinRcond) {
        use_newton = false;
        status.fell_back = true;
      } else {
        ws.step = ws.llt.solve(ws.residual);
        double scale = 1.0;
        bool accepted = false;
        for (int h = 0; h < kMaxHalvings; ++h, scale *= 0.5) {
          ws.trial = x - scale * ws.step;
          p.gradient_into(ws.trial, ws.grad);
          ws.trial_residual = ws.trial + eps * ws.grad - y;
          const double trial_norm = ws.trial_residual.norm();
          if (trial_norm < rnorm) {
            x = ws.trial;
            ws.residual = ws.trial_residual;
            rnorm = trial_norm;
            accepted = true;
            break;
          }
        }
        if (!accepted) {
          use_newton = false;
          status.fell_back = true;
          p.gradient_into(x, ws.grad);
        }
        continue;
      }
    }

    // Gradient descent on f(x) + ||x - y||^2 / (2 eps). Its gradient is
    // residual / eps and its smoothness is L + 1/eps.
    x -= gd_step * ws.residual;
    p.gradient_into(x, ws.grad);
    ws.residual = x + eps * ws.grad - y;
    rnorm = ws.residual.norm();
  }

  status.residual = rnorm;
  status.converged = rnorm <= tol;
  return status;
}

ProxOutcome prox_solve(const Potential& p, ConstVectorRef y, double eps,
                       const ProxConfig& cfg) {
  cfg.validate();
  if (y.size() != p.dimension()) {
    throw PreconditionError("prox: point has wrong dimension");
  }
  ProxWorkspace ws(p.dimension());
  ProxOutcome out;
  out.x.resize(p.dimension());
  const ProxStatus s = prox_solve_into(p, y, eps, cfg, ws, out.x);
  out.residual = s.residual;
  out.iterations = s.iterations;
  out.converged = s.converged;
  out.fell_back = s.fell_back;
  return out;
}

ProxOutcome prox_step(const Potential& p, ConstVectorRef y, double eps,
                      const ProxConfig& cfg) {
  ProxOutcome out = prox_solve(p, y, eps, cfg);
  if (!out.converged) {
    const double r = out.residual;
    throw ConvergenceError("prox: no convergence after " +
                               std::to_string(out.iterations) +
                               " iterations (residual " + std::to_string(r) + ")",
                           std::move(out.x), r);
  }
  return out;
}

Vector prox_forward(const Potential& p, ConstVectorRef x, double eps) {
  return x + eps * p.gradient(x);
}

}  // namespace pla
