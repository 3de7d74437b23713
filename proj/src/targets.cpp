#include "pla/targets.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "pla/errors.hpp"
#include "pla/rng.hpp"

namespace pla {

using nlohmann::json;

void Potential::third_directional_into(ConstVectorRef, int, MatrixRef) const {
  throw CapabilityError("potential does not provide third derivatives");
}

Vector Potential::gradient(ConstVectorRef x) const {
  Vector g(dimension());
  gradient_into(x, g);
  return g;
}

Matrix Potential::hessian(ConstVectorRef x) const {
  Matrix h(dimension(), dimension());
  hessian_into(x, h);
  return h;
}

Matrix Potential::third_directional(ConstVectorRef x, int i) const {
  if (i < 0 || i >= dimension()) {
    throw PreconditionError("third derivative index out of range");
  }
  Matrix t(dimension(), dimension());
  third_directional_into(x, i, t);
  return t;
}

double symmetric_op_norm(ConstMatrixRef m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1) return std::abs(m(0, 0));
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// GaussianTarget

GaussianTarget::GaussianTarget(Vector mean, Vector eigenvalues, Matrix basis)
    : mean_(std::move(mean)),
      eigenvalues_(std::move(eigenvalues)),
      basis_(std::move(basis)) {
  const auto n = mean_.size();
  if (n == 0) throw PreconditionError("gaussian target needs dimension >= 1");
  if (eigenvalues_.size() != n || basis_.rows() != n || basis_.cols() != n) {
    throw PreconditionError("gaussian target: inconsistent dimensions");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(eigenvalues_[i] > 0.0) || !std::isfinite(eigenvalues_[i])) {
      throw PreconditionError("gaussian target: eigenvalues must be positive");
    }
  }
  const double defect =
      (basis_.transpose() * basis_ - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  if (!(defect <= 1e-12)) {
    throw PreconditionError("gaussian target: basis is not orthonormal");
  }
  precision_ = basis_ * eigenvalues_.cwiseInverse().asDiagonal() *
               basis_.transpose();
  precision_ = 0.5 * (precision_ + precision_.transpose()).eval();
}

GaussianTarget GaussianTarget::diagonal(const Vector& eigenvalues) {
  const auto n = eigenvalues.size();
  return GaussianTarget(Vector::Zero(n), eigenvalues, Matrix::Identity(n, n));
}

GaussianTarget GaussianTarget::isotropic(int n, double variance) {
  return diagonal(Vector::Constant(n, variance));
}

double GaussianTarget::value(ConstVectorRef x) const {
  const Vector d = x - mean_;
  return 0.5 * d.dot(precision_ * d);
}

void GaussianTarget::gradient_into(ConstVectorRef x, VectorRef out) const {
  out.noalias() = precision_ * (x - mean_);
}

void GaussianTarget::hessian_into(ConstVectorRef, MatrixRef out) const {
  out = precision_;
}

void GaussianTarget::third_directional_into(ConstVectorRef, int,
                                            MatrixRef out) const {
  out.setZero();
}

double GaussianTarget::smoothness_L() const {
  return 1.0 / eigenvalues_.minCoeff();
}

std::optional<double> GaussianTarget::lsi_alpha() const {
  return 1.0 / eigenvalues_.maxCoeff();
}

Matrix GaussianTarget::covariance() const {
  return basis_ * eigenvalues_.asDiagonal() * basis_.transpose();
}

Vector GaussianTarget::prox_closed_form(ConstVectorRef y, double eps) const {
  // (I + eps Sigma^{-1})(x - mean) = y - mean, diagonal in the eigenbasis.
  const Vector coords = basis_.transpose() * (y - mean_);
  const Vector shrink =
      (1.0 + eps * eigenvalues_.cwiseInverse().array()).inverse().matrix();
  return mean_ + basis_ * shrink.cwiseProduct(coords);
}

json GaussianTarget::to_json() const {
  json basis = json::array();
  for (Eigen::Index i = 0; i < basis_.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < basis_.cols(); ++j) row.push_back(basis_(i, j));
    basis.push_back(row);
  }
  return json{{"kind", "gaussian"},
              {"mean", std::vector<double>(mean_.data(), mean_.data() + mean_.size())},
              {"eigs", std::vector<double>(eigenvalues_.data(),
                                           eigenvalues_.data() + eigenvalues_.size())},
              {"basis", basis}};
}

// ---------------------------------------------------------------------------
// PerturbedQuadratic1D

PerturbedQuadratic1D::PerturbedQuadratic1D(double amplitude)
    : amplitude_(amplitude) {
  if (!(std::abs(amplitude) < 1.0)) {
    throw PreconditionError("perturbed quadratic: need |a| < 1");
  }
}

double PerturbedQuadratic1D::value(ConstVectorRef x) const {
  return 0.5 * x[0] * x[0] + amplitude_ * std::cos(x[0]);
}

void PerturbedQuadratic1D::gradient_into(ConstVectorRef x, VectorRef out) const {
  out[0] = x[0] - amplitude_ * std::sin(x[0]);
}

void PerturbedQuadratic1D::hessian_into(ConstVectorRef x, MatrixRef out) const {
  out(0, 0) = 1.0 - amplitude_ * std::cos(x[0]);
}

void PerturbedQuadratic1D::third_directional_into(ConstVectorRef x, int,
                                                  MatrixRef out) const {
  out(0, 0) = amplitude_ * std::sin(x[0]);
}

double PerturbedQuadratic1D::smoothness_L() const {
  return 1.0 + std::abs(amplitude_);
}

std::optional<double> PerturbedQuadratic1D::smoothness_M() const {
  return std::abs(amplitude_);
}

std::optional<double> PerturbedQuadratic1D::lsi_alpha() const {
  // Holley-Stroock from the standard Gaussian, or Bakry-Emery from
  // f'' >= 1 - |a|; both are valid, report the larger.
  const double a = std::abs(amplitude_);
  return std::max(std::exp(-4.0 * a), 1.0 - a);
}

json PerturbedQuadratic1D::to_json() const {
  return json{{"kind", "perturbed_quadratic"}, {"a", amplitude_}};
}

// ---------------------------------------------------------------------------
// JSON construction

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("target: unknown field '" + key + "'");
    }
  }
}

Vector vector_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string("target: ") + what + " must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw ConfigError(std::string("target: ") + what + " must hold numbers");
    }
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

}  // namespace

std::unique_ptr<Potential> potential_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw ConfigError("target: expected an object with a string 'kind'");
  }
  const std::string kind = j["kind"].get<std::string>();
  try {
    if (kind == "gaussian") {
      reject_unknown_keys(j, {"kind", "mean", "eigs", "basis"});
      if (!j.contains("eigs")) throw ConfigError("target: gaussian needs 'eigs'");
      Vector eigs = vector_from_json(j["eigs"], "eigs");
      const auto n = eigs.size();
      Vector mean = j.contains("mean") ? vector_from_json(j["mean"], "mean")
                                       : Vector::Zero(n);
      Matrix basis = Matrix::Identity(n, n);
      if (j.contains("basis")) {
        const json& b = j["basis"];
        if (!b.is_array() || static_cast<Eigen::Index>(b.size()) != n) {
          throw ConfigError("target: basis must be an n x n array of rows");
        }
        for (Eigen::Index r = 0; r < n; ++r) {
          Vector row = vector_from_json(b[static_cast<std::size_t>(r)], "basis row");
          if (row.size() != n) throw ConfigError("target: basis row has wrong length");
          basis.row(r) = row.transpose();
        }
      }
      return std::make_unique<GaussianTarget>(std::move(mean), std::move(eigs),
                                              std::move(basis));
    }
    if (kind == "perturbed_quadratic") {
      reject_unknown_keys(j, {"kind", "a"});
      if (!j.contains("a") || !j["a"].is_number()) {
        throw ConfigError("target: perturbed_quadratic needs numeric 'a'");
      }
      return std::make_unique<PerturbedQuadratic1D>(j["a"].get<double>());
    }
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("target: unknown kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Stationary points and smoothness scans

Vector find_stationary_point(const Potential& p, ConstVectorRef x_init,
                             double tol, int max_iter) {
  if (!(tol > 0.0)) throw PreconditionError("stationary point: tol must be > 0");
  if (x_init.size() != p.dimension()) {
    throw PreconditionError("stationary point: x_init has wrong dimension");
  }
  const double step = 1.0 / p.smoothness_L();
  Vector x = x_init;
  Vector g(p.dimension());
  Vector best = x;
  double best_norm = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= max_iter; ++it) {
    p.gradient_into(x, g);
    const double norm = g.norm();
    if (norm < best_norm) {
      best_norm = norm;
      best = x;
    }
    if (norm <= tol) return x;
    x -= step * g;
  }
  throw ConvergenceError("stationary point search hit the iteration cap",
                         std::move(best), best_norm);
}

SmoothnessEstimate verify_smoothness(const Potential& p, int sample_count,
                                     double radius, std::uint64_t seed) {
  SmoothnessEstimate est;
  if (sample_count <= 0) return est;
  const int n = p.dimension();
  CounterRng rng(seed, 0);
  auto draw = [&] {
    Vector x(n);
    for (int i = 0; i < n; ++i) x[i] = radius * (2.0 * rng.uniform() - 1.0);
    return x;
  };
  const double local = 1e-3 * std::max(radius, 1e-12);
  Matrix h_prev(n, n), h(n, n), h_near(n, n);
  Vector x_prev;
  for (int s = 0; s < sample_count; ++s) {
    const Vector x = draw();
    p.hessian_into(x, h);
    est.L_hat = std::max(est.L_hat, symmetric_op_norm(h));

    // A nearby partner catches local Lipschitz behaviour; the previous
    // sample catches long-range behaviour.
    Vector dir(n);
    rng.fill_normal(dir);
    const Vector near = x + local * dir.normalized();
    p.hessian_into(near, h_near);
    est.M_hat = std::max(est.M_hat,
                         symmetric_op_norm(h_near - h) / (near - x).norm());
    if (s > 0) {
      const double dist = (x - x_prev).norm();
      if (dist > 0.0) {
        est.M_hat = std::max(est.M_hat, symmetric_op_norm(h - h_prev) / dist);
      }
    }
    x_prev = x;
    h_prev = h;
  }
  est.samples = sample_count;
  est.empty = false;
  return est;
}

}  // namespace pla
