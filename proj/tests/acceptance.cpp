// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion;
// pass criterion ids (A1 ... A12) to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pla/cli/commands.hpp"
#include "pla/diagnostics.hpp"
#include "pla/sde_lab.hpp"
#include "pla/theory.hpp"

using namespace pla;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  std::string title;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<double> logspace(double lo, double hi, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return v;
}

const std::vector<double> kLambdas = {0.25, 0.5, 1.0, 2.0, 4.0};

Outcome a1_gaussian_limit() {
  GaussianTarget g = GaussianTarget::isotropic(1, 1.0);
  ChainConfig c;
  c.eps = 0.5;
  c.steps = 200;
  c.n_chains = 20000;
  c.seed = 2024;
  c.init = PointMass{Vector::Zero(1)};
  const EmpiricalMoments em = moments(run_ensemble(g, c, Algorithm::pla));
  const double expected = theory::pla_limit_gaussian(std::vector<double>{1.0}, 0.5)[0];
  const double z = (em.cov(0, 0) - expected) / em.cov_se(0, 0);
  return {std::abs(z) <= 3.0,
          fmt("variance %.5f, expected %.5f, se %.5f, |z| = %.2f", em.cov(0, 0), expected,
              em.cov_se(0, 0), std::abs(z))};
}

Outcome a2_kl_identity() {
  double worst_pla = 0, worst_ula = 0, worst_swapped = 0;
  for (double lam : kLambdas) {
    const std::vector<double> l = {lam};
    for (double eps : logspace(1e-3 * lam, 3.0 * lam, 20)) {
      const auto lim = theory::pla_limit_gaussian(l, eps);
      const double bias = theory::kl_bias_pla(l, eps);
      worst_pla = std::max(worst_pla, std::abs(theory::gaussian_kl(lim, l) - bias));
      worst_swapped = std::max(worst_swapped, std::abs(theory::gaussian_kl(l, lim) - bias));
      if (const auto u = theory::ula_limit_gaussian(l, eps)) {
        worst_ula = std::max(worst_ula, std::abs(theory::gaussian_kl(*u, l) -
                                                  theory::kl_bias_ula(l, eps)));
        worst_swapped = std::max(worst_swapped, std::abs(theory::gaussian_kl(l, *u) -
                                                         theory::kl_bias_ula(l, eps)));
      }
    }
  }
  const double at_half = theory::gaussian_kl(theory::pla_limit_gaussian(std::vector<double>{1.0}, 0.5),
                                             std::vector<double>{1.0});
  return {worst_pla <= 1e-12 && worst_ula <= 1e-12,
          fmt("max |KL(limit||target) - closed form|: pla %.3e, ula %.3e "
              "(eps=0.5, lambda=1: %.6f vs %.6f); reversed KL(target||limit) matches to %.1e",
              worst_pla, worst_ula, at_half,
              theory::kl_bias_pla(std::vector<double>{1.0}, 0.5), worst_swapped)};
}

Outcome a3_ordering() {
  int checked = 0, bad = 0;
  for (double lam : kLambdas) {
    const std::vector<double> l = {lam};
    for (double eps : logspace(1e-3 * lam, 3.0 * lam, 20)) {
      const double u = theory::kl_bias_ula(l, eps);
      if (!std::isfinite(u)) continue;
      ++checked;
      if (!(theory::kl_bias_pla(l, eps) < u)) ++bad;
    }
  }
  // A mixed spectrum too.
  const std::vector<double> mixed = {0.3, 1.0, 2.5};
  for (double eps : logspace(1e-3, 0.59, 20)) {
    ++checked;
    if (!(theory::kl_bias_pla(mixed, eps) < theory::kl_bias_ula(mixed, eps))) ++bad;
  }
  return {bad == 0, fmt("%d finite grid points, %d violations", checked, bad)};
}

Outcome a4_scaling() {
  bool ok = true;
  std::string detail;
  for (const std::vector<double>& lam :
       {std::vector<double>{1.0}, std::vector<double>{0.5, 1.0, 2.0}}) {
    const auto grid = logspace(1e-3, 1e-2, 10);
    std::vector<double> bias;
    for (double e : grid) bias.push_back(theory::kl_bias_pla(lam, e));
    const ScalingFit fit = bias_scaling_fit(grid, bias);
    double c2 = 0, c3 = 0;
    for (double l : lam) {
      c2 += 1 / (16 * l * l);
      c3 += 1 / (24 * l * l * l);
    }
    const double e0 = 1e-3;
    const double lead = theory::kl_bias_pla(lam, e0) / (e0 * e0);
    const double gap = (theory::kl_bias_ula(lam, e0) - theory::kl_bias_pla(lam, e0)) / (e0 * e0 * e0);
    const bool pass = fit.slope >= 1.95 && fit.slope <= 2.05 &&
                      std::abs(lead - c2) <= 0.05 * c2 && std::abs(gap - c3) <= 0.05 * c3;
    ok = ok && pass;
    detail += fmt("[n=%zu slope %.4f, eps^2 coef %.5f vs %.5f, gap/eps^3 %.5f vs %.5f] ",
                  lam.size(), fit.slope, lead, c2, gap, c3);
  }
  return {ok, detail};
}

Outcome a5_theorem1() {
  const std::vector<double> lam = {1.0};
  const double ceiling = theory::kl_step_ceiling(1, 1, 0);
  long rows = 0, bad_bound = 0, bad_step = 0;
  double min_slack = std::numeric_limits<double>::infinity();
  for (double init_var : {1.0, 0.1, 5.0}) {
    for (int i = 1; i <= 20; ++i) {
      theory::BoundParams bp;
      bp.eps = ceiling * i / 20.0;
      std::vector<double> cov = {init_var};
      bp.H0 = theory::gaussian_kl(cov, lam);
      double prev = bp.H0;
      for (long k = 0; k <= 500; ++k) {
        if (k > 0) {
          cov = theory::gaussian_cov_step(lam, bp.eps, cov);
          const double h = theory::gaussian_kl(cov, lam);
          if (h > theory::kl_one_step_bound(bp, prev)) ++bad_step;
          prev = h;
        }
        bp.k = k;
        const double slack = theory::kl_bound_thm1(bp) - theory::gaussian_kl(cov, lam);
        min_slack = std::min(min_slack, slack);
        if (slack < 0) ++bad_bound;
        ++rows;
      }
    }
  }
  return {bad_bound == 0 && bad_step == 0,
          fmt("%ld (eps, k) rows, min slack %.3e, bound violations %ld, one-step violations %ld",
              rows, min_slack, bad_bound, bad_step)};
}

Outcome a6_renyi() {
  const double v = theory::renyi_bias_pla(1, 1.0, 0.5, 2.0);
  const double u = theory::renyi_bias_ula(1, 1.0, 0.5, 4.0);
  int checked = 0, bad = 0;
  for (double q : {1.5, 2.0, 3.0, 5.0, 8.0}) {
    for (double eps : logspace(1e-3, 1.9, 20)) {
      const double ru = theory::renyi_bias_ula(1, 1.0, eps, q);
      if (!std::isfinite(ru)) continue;
      ++checked;
      if (!(theory::renyi_bias_pla(1, 1.0, eps, q) < ru)) ++bad;
    }
  }
  return {std::abs(v - 0.020411) <= 1e-5 && std::isinf(u) && u > 0 && bad == 0,
          fmt("R_2 PLA bias %.6f, ULA q=4 %s, %d finite points with %d ordering violations", v,
              std::isinf(u) ? "+inf" : "finite", checked, bad)};
}

Outcome a7_prox() {
  std::mt19937_64 gen(77);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  const ProxConfig cfg;
  double worst_res = 0, worst_closed = 0, worst_trip = 0;
  int bad = 0;
  for (int c = 0; c < 1000; ++c) {
    const bool gaussian = c % 2 == 0;
    std::unique_ptr<Potential> p;
    const int n = gaussian ? 1 + c % 4 : 1;
    if (gaussian) {
      Vector lam(n), mean(n);
      Matrix m(n, n);
      for (int i = 0; i < n; ++i) {
        lam[i] = std::exp(unif(gen) * 6 - 3);
        mean[i] = normal(gen);
        for (int j = 0; j < n; ++j) m(i, j) = normal(gen);
      }
      Eigen::HouseholderQR<Matrix> qr(m);
      p = std::make_unique<GaussianTarget>(mean, lam, qr.householderQ() * Matrix::Identity(n, n));
    } else {
      p = std::make_unique<PerturbedQuadratic1D>(unif(gen) * 1.9 - 0.95);
    }
    Vector y(n);
    for (int i = 0; i < n; ++i) y[i] = 4 * normal(gen);
    const double eps = std::exp(unif(gen) * 8 - 5);
    const ProxOutcome out = prox_step(*p, y, eps, cfg);
    const double tol = cfg.effective_tol(y);
    const double res = (out.x + eps * p->gradient(out.x) - y).norm();
    const double trip = (prox_forward(*p, out.x, eps) - y).norm();
    worst_res = std::max(worst_res, res / tol);
    worst_trip = std::max(worst_trip, trip / tol);
    if (res > tol || trip > tol) ++bad;
    if (gaussian) {
      const double d = (out.x - static_cast<GaussianTarget&>(*p).prox_closed_form(y, eps)).norm();
      worst_closed = std::max(worst_closed, d);
      if (d > 1e-10) ++bad;
    }
  }
  return {bad == 0, fmt("1000 solves, max residual/tol %.2e, max round trip/tol %.2e, "
                        "max |iterative - closed form| %.2e",
                        worst_res, worst_trip, worst_closed)};
}

Outcome a8_lemma4() {
  std::mt19937_64 gen(88);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  PerturbedQuadratic1D pq(0.5);
  GaussianTarget g = GaussianTarget::diagonal((Vector(3) << 0.5, 1.0, 4.0).finished());
  int violations = 0, cases = 0;
  double min_eig = 10, max_eig = 0;
  for (const Potential* p : {static_cast<const Potential*>(&pq), static_cast<const Potential*>(&g)}) {
    const double limit = sde::interpolation_time_limit(*p);
    for (int c = 0; c < 500; ++c) {
      Vector x(p->dimension());
      for (int i = 0; i < x.size(); ++i) x[i] = 3 * normal(gen);
      const double t = limit * unif(gen);
      const sde::EnvelopeReport r = sde::check_lemma4(*p, x, t);
      min_eig = std::min(min_eig, r.G_min_eig);
      max_eig = std::max(max_eig, r.G_max_eig);
      ++cases;
      if (!r.holds()) ++violations;
    }
  }
  return {violations == 0, fmt("%d cases, eig(G) in [%.4f, %.4f], %d violations", cases, min_eig,
                               max_eig, violations)};
}

Outcome a9_sde() {
  const std::vector<int> substeps = {100, 200, 400};
  bool ok = true;
  std::string detail;
  GaussianTarget quad = GaussianTarget::isotropic(1, 1.0);
  PerturbedQuadratic1D pert(0.5);
  const Vector x0 = Vector::Constant(1, 0.7);
  struct Run {
    const char* name;
    const Potential* p;
    sde::SdeScheme scheme;
    bool counts;
  };
  for (const Run& r : {Run{"quadratic/euler", &quad, sde::SdeScheme::euler_maruyama, true},
                       Run{"perturbed/milstein", &pert, sde::SdeScheme::milstein, true},
                       Run{"perturbed/euler (info)", &pert, sde::SdeScheme::euler_maruyama, false}}) {
    const double t_end = sde::interpolation_time_limit(*r.p);
    const sde::SdeStudy s = sde::run_sde_study(*r.p, x0, t_end, substeps, 32, 99, r.scheme, 0);
    const double mono = s.fraction_monotone(), within = s.fraction_ratios_within(1.6, 2.6);
    if (r.counts) ok = ok && mono == 1.0 && within >= 0.9;
    detail += fmt("[%s: monotone %.2f, ratio in [1.6,2.6] %.2f] ", r.name, mono, within);
  }
  return {ok, detail};
}

Outcome a10_nongaussian() {
  PerturbedQuadratic1D p(0.5);
  std::vector<double> kls;
  double floor_last = 0;
  std::string detail;
  for (double eps : {0.2, 0.1, 0.05}) {
    ChainConfig c;
    c.eps = eps;
    c.steps = static_cast<int>(std::lround(20.0 / eps));
    c.n_chains = 100000;
    c.seed = 1010;
    c.init = ProxPushforward{};
    const Matrix f = run_ensemble(p, c, Algorithm::pla).final_iterates();
    const std::vector<double> s(f.data(), f.data() + f.size());
    const HistogramKl h = kl_vs_quadrature_1d(s, p, HistogramGrid{-8.0, 8.0, {}, 16});
    kls.push_back(h.kl);
    floor_last = h.binning_floor;
    detail += fmt("[eps %.2f: KL %.2e, floor %.2e] ", eps, h.kl, h.binning_floor);
  }
  const bool mono = kls[0] > kls[1] && kls[1] > kls[2];
  return {mono && kls[2] < 0.01 + floor_last, detail + (mono ? "monotone" : "not monotone")};
}

Outcome a11_budget() {
  std::mt19937_64 gen(111);
  std::uniform_real_distribution<double> unif;
  auto lu = [&](double lo, double hi) { return std::exp(std::log(lo) + unif(gen) * std::log(hi / lo)); };
  int bad_bound = 0, bad_scale = 0, scaled = 0;
  double worst = 0;
  for (int c = 0; c < 100; ++c) {
    const double alpha = lu(0.05, 2.0), L = alpha * lu(1.0, 10.0), M = unif(gen) * 2;
    const int n = 1 + static_cast<int>(unif(gen) * 10);
    const double delta = lu(1e-6, 1e-1), H0 = lu(1e-2, 1e3);
    const theory::Budget b = theory::budget_cor2(alpha, L, M, n, delta, H0);
    const theory::Budget h = theory::budget_cor2(alpha, L, M, n, delta / 2, H0);
    if (theory::kl_bound_thm1({alpha, L, M, n, b.eps, b.k, H0}) > delta) ++bad_bound;
    if (theory::kl_bound_thm1({alpha, L, M, n, h.eps, h.k, H0}) > delta / 2) ++bad_bound;
    if (!b.clamped && !h.clamped) {
      ++scaled;
      const double r = h.eps / b.eps * std::sqrt(2.0);
      worst = std::max(worst, std::abs(r - 1));
      if (std::abs(r - 1) > 0.01) ++bad_scale;
    }
  }
  return {bad_bound == 0 && bad_scale == 0 && scaled > 0,
          fmt("100 draws: %d bound violations; %d unclamped pairs, max |ratio*sqrt2 - 1| %.2e",
              bad_bound, scaled, worst)};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "pla");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream sink;
  auto* old = std::cout.rdbuf(sink.rdbuf());
  const int rc = cli::run_cli(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old);
  return rc;
}

Outcome a12_reproducibility() {
  const std::vector<std::vector<std::string>> commands = {
      {"sample", "--target", "perturbed_quadratic", "--eps", "0.1", "--steps", "50", "--chains", "500",
       "--seed", "5", "--thinning", "10"},
      {"bias-sweep", "--eigs", "0.5,2", "--eps-grid", "0.1,0.3,0.9", "--empirical", "--chains",
       "2000", "--steps", "60", "--bootstrap", "20", "--seed", "6"},
      {"bound-check", "--eigs", "1,2", "--k-max", "200", "--k-stride", "5"},
      {"sde-verify", "--target", "perturbed_quadratic", "--x0", "0.7", "--paths", "8", "--seed", "7"},
      {"prox-bench", "--target", "perturbed_quadratic", "--eps", "0.3", "--calls", "300"},
  };
  int identical = 0, failed = 0;
  std::string mismatched;
  for (const auto& cmd : commands) {
    std::string outs[3];
    for (int rep = 0; rep < 3; ++rep) {
      auto args = cmd;
      const std::string path = "acceptance_" + cmd[0] + "_" + std::to_string(rep) + ".csv";
      args.insert(args.end(), {"-o", path, "--threads", rep == 2 ? "3" : "1"});
      if (rep == 1) args.push_back("--chart");
      if (run_cli(args) != 0) ++failed;
      outs[rep] = slurp(path);
    }
    if (!outs[0].empty() && outs[0] == outs[1] && outs[0] == outs[2]) {
      ++identical;
    } else {
      mismatched += " " + cmd[0];
    }
  }
  return {identical == static_cast<int>(commands.size()) && failed == 0,
          fmt("%d/%zu subcommands byte-identical across reruns, chart toggle and thread count%s",
              identical, commands.size(), mismatched.empty() ? "" : (" (differ:" + mismatched + ")").c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {"A1", "Gaussian limit", 10, a1_gaussian_limit},
      {"A2", "KL bias identity", 1, a2_kl_identity},
      {"A3", "bias ordering", 1, a3_ordering},
      {"A4", "scaling exponent", 1, a4_scaling},
      {"A5", "bound dominance", 5, a5_theorem1},
      {"A6", "Renyi bias", 1, a6_renyi},
      {"A7", "prox correctness", 2, a7_prox},
      {"A8", "interpolation envelope", 5, a8_lemma4},
      {"A9", "SDE representation", 30, a9_sde},
      {"A10", "non-Gaussian convergence", 60, a10_nongaussian},
      {"A11", "budget self-consistency", 1, a11_budget},
      {"A12", "reproducibility", 10, a12_reproducibility},
  };
  std::vector<std::string> wanted(argv + 1, argv + argc);
  int failures = 0, ran = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s %s %s: %s (%.2f s, budget %.0f s%s)\n", c.id.c_str(), pass ? "PASS" : "FAIL",
                c.title.c_str(), o.detail.c_str(), secs, c.budget_s, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  if (ran == 0) {
    std::fprintf(stderr, "unknown criterion\n");
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
