#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "pla/types.hpp"

namespace pla {

/// Potential f of a target density nu = exp(-f) on R^n.
///
/// Derived classes implement the `*_into` hooks, which write into
/// caller-owned storage so samplers can run without allocating. The
/// value-returning wrappers are for everything else.
///
/// Smoothness follows the usual (L, M) convention: ||hess f||_op <= L
/// everywhere and the Hessian is M-Lipschitz in operator norm. M and the
/// log-Sobolev constant may be unknown.
class Potential {
 public:
  virtual ~Potential() = default;

  virtual int dimension() const = 0;
  virtual double value(ConstVectorRef x) const = 0;
  virtual void gradient_into(ConstVectorRef x, VectorRef out) const = 0;
  virtual void hessian_into(ConstVectorRef x, MatrixRef out) const = 0;

  /// Third derivatives are optional. When present, slice i is the matrix
  /// d/dx_i of the Hessian.
  virtual bool has_third_derivatives() const { return false; }
  virtual void third_directional_into(ConstVectorRef x, int i,
                                      MatrixRef out) const;

  virtual double smoothness_L() const = 0;
  virtual std::optional<double> smoothness_M() const = 0;
  virtual std::optional<double> lsi_alpha() const = 0;

  /// Convex potentials admit any proximal step size.
  virtual bool is_convex() const = 0;

  virtual nlohmann::json to_json() const = 0;

  Vector gradient(ConstVectorRef x) const;
  Matrix hessian(ConstVectorRef x) const;
  Matrix third_directional(ConstVectorRef x, int i) const;
};

/// N(mean, Q diag(eigs) Q^T). Covariance is kept in spectral form; every
/// closed form downstream is per-eigenvalue.
class GaussianTarget final : public Potential {
 public:
  GaussianTarget(Vector mean, Vector eigenvalues, Matrix basis);

  static GaussianTarget diagonal(const Vector& eigenvalues);
  static GaussianTarget isotropic(int n, double variance);

  int dimension() const override { return static_cast<int>(mean_.size()); }
  double value(ConstVectorRef x) const override;
  void gradient_into(ConstVectorRef x, VectorRef out) const override;
  void hessian_into(ConstVectorRef x, MatrixRef out) const override;
  bool has_third_derivatives() const override { return true; }
  void third_directional_into(ConstVectorRef x, int i,
                              MatrixRef out) const override;

  double smoothness_L() const override;
  std::optional<double> smoothness_M() const override { return 0.0; }
  std::optional<double> lsi_alpha() const override;
  bool is_convex() const override { return true; }
  nlohmann::json to_json() const override;

  const Vector& mean() const { return mean_; }
  const Vector& eigenvalues() const { return eigenvalues_; }
  const Matrix& basis() const { return basis_; }
  const Matrix& precision() const { return precision_; }
  Matrix covariance() const;

  /// Exact solution of x + eps * grad f(x) = y.
  Vector prox_closed_form(ConstVectorRef y, double eps) const;

 private:
  Vector mean_;
  Vector eigenvalues_;
  Matrix basis_;
  Matrix precision_;
};

/// f(x) = x^2/2 + a cos(x) on R, |a| < 1. Strongly convex with
/// f'' = 1 - a cos x in [1 - |a|, 1 + |a|].
class PerturbedQuadratic1D final : public Potential {
 public:
  explicit PerturbedQuadratic1D(double amplitude);

  int dimension() const override { return 1; }
  double value(ConstVectorRef x) const override;
  void gradient_into(ConstVectorRef x, VectorRef out) const override;
  void hessian_into(ConstVectorRef x, MatrixRef out) const override;
  bool has_third_derivatives() const override { return true; }
  void third_directional_into(ConstVectorRef x, int i,
                              MatrixRef out) const override;

  double smoothness_L() const override;
  std::optional<double> smoothness_M() const override;
  std::optional<double> lsi_alpha() const override;
  bool is_convex() const override { return true; }
  nlohmann::json to_json() const override;

  double amplitude() const { return amplitude_; }

 private:
  double amplitude_;
};

/// Builds a target from {"kind":"gaussian",...} or
/// {"kind":"perturbed_quadratic","a":...}. Unknown keys are rejected.
std::unique_ptr<Potential> potential_from_json(const nlohmann::json& j);

/// Gradient descent with step 1/L until ||grad f|| <= tol.
/// Throws ConvergenceError (with the best iterate) after max_iter steps.
Vector find_stationary_point(const Potential& p, ConstVectorRef x_init,
                             double tol, int max_iter = 100000);

struct SmoothnessEstimate {
  double L_hat = 0.0;
  double M_hat = 0.0;
  int samples = 0;
  bool empty = true;
};

/// Sampled lower estimates of L and M over the cube [-radius, radius]^n.
SmoothnessEstimate verify_smoothness(const Potential& p, int sample_count,
                                     double radius, std::uint64_t seed);

/// Largest |eigenvalue| of a symmetric matrix.
double symmetric_op_norm(ConstMatrixRef m);

}  // namespace pla
