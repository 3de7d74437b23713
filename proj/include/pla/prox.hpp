#pragma once

#include "pla/targets.hpp"
#include "pla/types.hpp"

namespace pla {

enum class ProxSolver { newton, gradient_descent };
enum class ToleranceMode { relative, absolute };

/// Inner-solve settings. With the relative mode the residual threshold is
/// tol * (1 + ||y||).
struct ProxConfig {
  double tol = 1e-10;
  ToleranceMode tol_mode = ToleranceMode::relative;
  int max_iter = 10000;
  ProxSolver solver = ProxSolver::newton;

  void validate() const;
  double effective_tol(ConstVectorRef y) const;
};

struct ProxStatus {
  double residual = 0.0;  // ||x + eps grad f(x) - y||
  int iterations = 0;
  bool converged = false;
  bool fell_back = false;  // Newton handed over to gradient descent
};

struct ProxOutcome {
  Vector x;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  bool fell_back = false;
};

/// Scratch space for repeated solves in one dimension.
struct ProxWorkspace {
  explicit ProxWorkspace(int n);

  Vector grad;
  Vector residual;
  Vector step;
  Vector trial;
  Vector trial_residual;
  Matrix jacobian;
  Eigen::LLT<Matrix> llt;
};

/// Rejects eps <= 0, and eps > 1/L when p is not convex.
void check_prox_preconditions(const Potential& p, double eps);

/// Solves x + eps * grad f(x) = y (the minimiser of
/// f(x) + ||x - y||^2 / (2 eps)) starting from x = y. Writes the iterate into
/// `x` and reports convergence without throwing on the iteration cap.
ProxStatus prox_solve_into(const Potential& p, ConstVectorRef y, double eps,
                           const ProxConfig& cfg, ProxWorkspace& ws,
                           VectorRef x);

ProxOutcome prox_solve(const Potential& p, ConstVectorRef y, double eps,
                       const ProxConfig& cfg = {});

/// As prox_solve, but non-convergence is a ConvergenceError.
ProxOutcome prox_step(const Potential& p, ConstVectorRef y, double eps,
                      const ProxConfig& cfg = {});

/// T(x) = x + eps * grad f(x), the inverse of the proximal map.
Vector prox_forward(const Potential& p, ConstVectorRef x, double eps);

}  // namespace pla
