#include <doctest.h>

#include <cmath>

#include "pla/errors.hpp"
#include "pla/sde_lab.hpp"
#include "test_support.hpp"

using namespace pla;
using namespace pla::sde;
using testing::CosineRidge;
using testing::Gen;

TEST_CASE("at t = 0 the process is plain Langevin") {
  PerturbedQuadratic1D p(0.5);
  const Vector x = Vector::Constant(1, 0.8);
  const auto q = interpolation_quantities(p, x, 0.0);
  CHECK(q.G(0, 0) == 1.0);
  CHECK(q.mu[0] == doctest::Approx(-p.gradient(x)[0]));
  CHECK(q.mu_tilde.norm() == 0.0);
}

TEST_CASE("gaussian targets: closed-form drift and diffusion") {
  Gen gen(1);
  const int n = 3;
  const Vector lam = (Vector(3) << 0.5, 1.0, 3.0).finished();
  const Matrix Q = gen.rotation(n);
  GaussianTarget g(gen.vector(n), lam, Q);
  const double t = 0.05;
  const Vector x = gen.vector(n);
  const auto q = interpolation_quantities(g, x, t);
  const Matrix S = (Matrix::Identity(n, n) + t * g.precision()).inverse();
  CHECK((q.sqrtG - S).norm() < 1e-12);
  CHECK((q.G - S * S).norm() < 1e-12);
  CHECK((q.mu + S * g.gradient(x)).norm() < 1e-12);
  CHECK(q.div_G.norm() == 0.0);
  CHECK((q.mu_tilde + t * g.precision() * S * S * g.gradient(x)).norm() < 1e-12);
}

TEST_CASE("analytic divergence of G matches finite differences") {
  Gen gen(2);
  CosineRidge r(0.5, gen.vector(3, 0.5));
  for (int c = 0; c < 30; ++c) {
    const Vector x = gen.vector(3, 2.0);
    const double t = gen.uniform(0.0, 0.3);
    const auto a = interpolation_quantities(r, x, t, DivergenceMode::analytic);
    const auto f = interpolation_quantities(r, x, t, DivergenceMode::finite_difference);
    CHECK_FALSE(a.approximate);
    CHECK(f.approximate);
    CHECK((a.div_G - f.div_G).norm() < 1e-8);
    for (int k = 0; k < 3; ++k) {
      CHECK((gradient_of_G(r, x, t, k) - gradient_of_G_fd(r, x, t, k)).norm() < 1e-8);
    }
    // Both ways of writing the shifted drift agree.
    const Vector direct = a.mu - a.div_G + a.G * r.gradient(x);
    CHECK((a.mu_tilde - direct).norm() < 1e-12 * (1 + direct.norm() + r.gradient(x).norm()));
  }
}

TEST_CASE("capability and singularity errors") {
  class NoThird final : public Potential {
   public:
    int dimension() const override { return 1; }
    double value(ConstVectorRef x) const override { return 0.5 * x.squaredNorm(); }
    void gradient_into(ConstVectorRef x, VectorRef out) const override { out = x; }
    void hessian_into(ConstVectorRef, MatrixRef out) const override { out.setIdentity(); }
    double smoothness_L() const override { return 1; }
    std::optional<double> smoothness_M() const override { return 0.0; }
    std::optional<double> lsi_alpha() const override { return 1.0; }
    bool is_convex() const override { return true; }
    nlohmann::json to_json() const override { return {}; }
  } plain;
  CHECK_THROWS_AS(interpolation_quantities(plain, Vector::Zero(1), 0.1), CapabilityError);

  // f'' = 1 - 3 cos(x1) is -2 at the origin: I + t H is singular at t = 1/2.
  CosineRidge r(3.0, (Vector(1) << 1.0).finished());
  CHECK_THROWS_AS(interpolation_quantities(r, Vector::Zero(1), 0.5), SingularError);
  CHECK_THROWS_AS(interpolation_quantities(r, Vector::Zero(1), -0.1), PreconditionError);
}

TEST_CASE("property: envelope bounds on the admissible time range") {
  Gen gen(3);
  CosineRidge r(0.6, gen.vector(3, 0.8));
  PerturbedQuadratic1D p(0.8);
  for (const Potential* pot : {static_cast<const Potential*>(&r), static_cast<const Potential*>(&p)}) {
    const double limit = interpolation_time_limit(*pot);
    for (int c = 0; c < 200; ++c) {
      const Vector x = gen.vector(pot->dimension(), 3.0);
      const double t = gen.uniform(0.0, limit);
      const EnvelopeReport rep = check_lemma4(*pot, x, t);
      CHECK(rep.holds());
      CHECK(rep.G_min_eig > 0.75);
      CHECK(rep.G_max_eig < 4.0 / 3.0);
    }
    CHECK_THROWS_AS(check_lemma4(*pot, Vector::Zero(pot->dimension()), 1.01 * limit),
                    PreconditionError);
  }
  CHECK(interpolation_time_limit(p) == doctest::Approx(1.0 / (8 * 1.8)));
  CHECK(interpolation_time_limit(GaussianTarget::isotropic(2, 0.5)) == doctest::Approx(1.0 / 16));
}

TEST_CASE("brownian paths") {
  CounterRng rng(4, 0);
  const BrownianPath path = sample_brownian_path(2, 0.5, 50000, rng);
  CHECK(path.steps() == 50000);
  CHECK(path.dimension() == 2);
  const double var = path.increments.squaredNorm() / (2.0 * 50000);
  CHECK(var == doctest::Approx(0.5 / 50000).epsilon(0.03));
  CHECK(zero_brownian_path(1, 0.1, 10).increments.norm() == 0.0);
}

TEST_CASE("the SDE reproduces the implicit process") {
  SUBCASE("quadratic target, Euler-Maruyama is first order") {
    GaussianTarget g = GaussianTarget::isotropic(1, 1.0);
    const auto v = verify_sde_representation(g, Vector::Constant(1, 0.7), 0.1, {100, 200, 400}, 5, 0);
    CHECK(v.monotone);
    for (double r : v.ratios) CHECK(r == doctest::Approx(2.0).epsilon(0.3));
  }
  SUBCASE("perturbed target, Milstein is first order") {
    PerturbedQuadratic1D p(0.5);
    const SdeStudy s = run_sde_study(p, Vector::Constant(1, 0.7), interpolation_time_limit(p),
                                     {100, 200, 400}, 16, 2, SdeScheme::milstein, 1);
    CHECK(s.fraction_monotone() >= 0.9);
    CHECK(s.fraction_ratios_within(1.6, 2.6) >= 0.9);
  }
  SUBCASE("multi-dimensional target, Euler-Maruyama converges") {
    Gen gen(5);
    CosineRidge r(0.5, gen.vector(2, 0.7));
    const SdeStudy s = run_sde_study(r, Vector::Constant(2, 0.3), 0.05, {50, 200, 800}, 8, 3,
                                     SdeScheme::euler_maruyama, 1);
    for (const auto& v : s.paths) CHECK(v.errors.back() < v.errors.front());
    CHECK_THROWS_AS(run_sde_study(r, Vector::Constant(2, 0.3), 0.05, {50, 100}, 2, 3,
                                  SdeScheme::milstein, 1),
                    PreconditionError);
  }
  SUBCASE("zero noise isolates the integrator error") {
    // With W = 0 the Milstein correction cancels the Ito part of mu, leaving
    // Euler's method for dX/dt = -S grad f.
    PerturbedQuadratic1D p(0.5);
    const auto v = verify_sde_representation(p, Vector::Constant(1, 1.0), 0.08, {100, 200, 400},
                                             zero_brownian_path(1, 0.08, 400), SdeScheme::milstein);
    CHECK(v.monotone);
    for (double r : v.ratios) CHECK(r == doctest::Approx(2.0).epsilon(0.05));
  }
  SUBCASE("zero horizon gives zero error") {
    PerturbedQuadratic1D p(0.5);
    const auto v = verify_sde_representation(p, Vector::Constant(1, 1.0), 0.0, {1, 2},
                                             zero_brownian_path(1, 0.0, 2));
    CHECK(v.errors == std::vector<double>{0.0, 0.0});
  }
  SUBCASE("invalid requests") {
    PerturbedQuadratic1D p(0.5);
    const Vector x0 = Vector::Zero(1);
    CHECK_THROWS_AS(verify_sde_representation(p, x0, 0.05, {3, 4}, zero_brownian_path(1, 0.05, 4)),
                    PreconditionError);
    CHECK_THROWS_AS(verify_sde_representation(p, x0, 0.5, {1}, zero_brownian_path(1, 0.5, 1)),
                    PreconditionError);
    CHECK_THROWS_AS(verify_sde_representation(p, x0, 0.05, {}, 1), PreconditionError);
  }
}

TEST_CASE("study results are independent of the worker count") {
  PerturbedQuadratic1D p(0.5);
  const auto a = run_sde_study(p, Vector::Constant(1, 0.7), 0.05, {10, 20}, 6, 9, SdeScheme::milstein, 1);
  const auto b = run_sde_study(p, Vector::Constant(1, 0.7), 0.05, {10, 20}, 6, 9, SdeScheme::milstein, 3);
  for (std::size_t i = 0; i < a.paths.size(); ++i) CHECK(a.paths[i].errors == b.paths[i].errors);
}
