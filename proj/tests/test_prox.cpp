#include <doctest.h>

#include <cmath>

#include "pla/errors.hpp"
#include "pla/prox.hpp"
#include "test_support.hpp"

using namespace pla;
using testing::CosineRidge;
using testing::Gen;

namespace {

double residual(const Potential& p, const Vector& x, const Vector& y, double eps) {
  return (x + eps * p.gradient(x) - y).norm();
}

}  // namespace

TEST_CASE("newton prox meets the tolerance on random inputs") {
  Gen gen(1);
  ProxConfig cfg;
  for (int c = 0; c < 300; ++c) {
    const int n = gen.integer(1, 5);
    GaussianTarget g(gen.vector(n), Eigen::Map<const Vector>(gen.spectrum(n, 0.05, 20.0).data(), n),
                     gen.rotation(n));
    const Vector y = gen.vector(n, 5.0);
    const double eps = gen.log_uniform(1e-4, 10.0);
    const ProxOutcome out = prox_step(g, y, eps, cfg);
    CHECK(out.converged);
    CHECK(out.residual <= cfg.effective_tol(y));
    CHECK(residual(g, out.x, y, eps) <= cfg.effective_tol(y) * 1.01);
    CHECK((out.x - g.prox_closed_form(y, eps)).norm() <= 1e-10 * (1 + y.norm()));
  }
}

TEST_CASE("prox on the perturbed quadratic") {
  Gen gen(2);
  for (int c = 0; c < 300; ++c) {
    PerturbedQuadratic1D p(gen.uniform(-0.95, 0.95));
    const Vector y = gen.vector(1, 6.0);
    const double eps = gen.log_uniform(1e-3, 20.0);
    const ProxOutcome out = prox_step(p, y, eps);
    CHECK(out.residual <= ProxConfig{}.effective_tol(y));
    // Round trip through the forward map.
    CHECK((prox_forward(p, out.x, eps) - y).norm() <= ProxConfig{}.effective_tol(y) * 1.01);
    // Independent scalar root finder.
    const double root = testing::bisect(
        [&](double x) { return x + eps * (x - p.amplitude() * std::sin(x)) - y[0]; }, -100, 100);
    CHECK(out.x[0] == doctest::Approx(root).epsilon(1e-9));
  }
}

TEST_CASE("gradient descent solver agrees with newton") {
  Gen gen(3);
  CosineRidge r(0.5, (Vector(3) << 0.8, -0.6, 0.7).finished());
  REQUIRE(r.is_convex());
  ProxConfig gd;
  gd.solver = ProxSolver::gradient_descent;
  gd.max_iter = 100000;
  for (int c = 0; c < 50; ++c) {
    const Vector y = gen.vector(3, 3.0);
    const double eps = gen.log_uniform(1e-2, 5.0);
    const ProxOutcome a = prox_step(r, y, eps);
    const ProxOutcome b = prox_step(r, y, eps, gd);
    CHECK((a.x - b.x).norm() < 1e-8 * (1 + y.norm()));
  }
}

TEST_CASE("absolute tolerance mode") {
  ProxConfig cfg;
  cfg.tol_mode = ToleranceMode::absolute;
  cfg.tol = 1e-12;
  const Vector y = Vector::Constant(2, 1e3);
  CHECK(cfg.effective_tol(y) == 1e-12);
  ProxConfig rel;
  CHECK(rel.effective_tol(y) == doctest::Approx(1e-10 * (1 + y.norm())));
}

TEST_CASE("preconditions") {
  PerturbedQuadratic1D p(0.5);
  const Vector y = Vector::Ones(1);
  CHECK_THROWS_AS(prox_step(p, y, 0.0), PreconditionError);
  CHECK_THROWS_AS(prox_step(p, y, -1.0), PreconditionError);
  CHECK_THROWS_AS(prox_step(p, y, std::nan("")), PreconditionError);

  ProxConfig bad;
  bad.tol = 0.0;
  CHECK_THROWS_AS(prox_step(p, y, 0.1, bad), PreconditionError);
  bad = {};
  bad.max_iter = 0;
  CHECK_THROWS_AS(prox_step(p, y, 0.1, bad), PreconditionError);

  SUBCASE("nonconvex targets need eps <= 1/L") {
    CosineRidge r(3.0, (Vector(2) << 1.0, 0.0).finished());
    REQUIRE_FALSE(r.is_convex());
    const Vector y2 = Vector::Ones(2);
    CHECK_THROWS_AS(prox_step(r, y2, 1.0 / r.smoothness_L() * 1.5), PreconditionError);
    const ProxOutcome out = prox_step(r, y2, 0.9 / r.smoothness_L());
    CHECK(residual(r, out.x, y2, 0.9 / r.smoothness_L()) < 1e-9);
  }
}

TEST_CASE("iteration cap raises with the best iterate") {
  PerturbedQuadratic1D p(0.9);
  ProxConfig cfg;
  cfg.tol = 1e-300;
  cfg.tol_mode = ToleranceMode::absolute;
  cfg.max_iter = 1;
  const Vector y = Vector::Constant(1, 5.0);
  CHECK_FALSE(prox_solve(p, y, 2.0, cfg).converged);
  try {
    prox_step(p, y, 2.0, cfg);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.best_iterate().size() == 1);
  }
}

TEST_CASE("workspace solve matches the allocating wrapper") {
  PerturbedQuadratic1D p(0.4);
  ProxWorkspace ws(1);
  Vector x(1);
  const Vector y = Vector::Constant(1, 1.7);
  const ProxStatus st = prox_solve_into(p, y, 0.3, {}, ws, x);
  CHECK(st.converged);
  CHECK(x[0] == prox_solve(p, y, 0.3).x[0]);
}
