#include "pla/cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "pla/cli/csv.hpp"
#include "pla/cli/svg.hpp"
#include "pla/diagnostics.hpp"
#include "pla/errors.hpp"
#include "pla/theory.hpp"

namespace pla::cli {

namespace {

std::string chart_path(const std::string& csv) {
  const auto dot = csv.rfind(".csv");
  return (dot != std::string::npos && dot + 4 == csv.size() ? csv.substr(0, dot) : csv) + ".svg";
}

void maybe_chart(const ExperimentConfig& cfg, const ChartSpec& spec) {
  if (cfg.chart) write_chart(cfg.output, chart_path(cfg.output), spec);
}

const GaussianTarget& require_gaussian(const Potential& p, const char* command) {
  const auto* g = dynamic_cast<const GaussianTarget*>(&p);
  if (!g) throw ConfigError(std::string(command) + " needs a gaussian target");
  return *g;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

std::vector<double> log_grid(double lo, double hi, int count) {
  if (count < 2) throw ConfigError("grid_points must be >= 2");
  std::vector<double> g(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    g[static_cast<std::size_t>(i)] =
        std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (count - 1));
  }
  return g;
}

void check_grid(const std::vector<double>& grid) {
  for (double e : grid) {
    if (!(e > 0.0) || !std::isfinite(e)) throw ConfigError("eps_grid entries must be positive");
  }
}

// Plug-in KL of the final iterates, with bootstrap SE; +inf if the chain blew up.
BootstrapEstimate empirical_kl(const Potential& p, const GaussianTarget& g,
                               const ExperimentConfig& cfg, double eps, Algorithm algo) {
  ExperimentConfig local = cfg;
  local.eps = eps;
  const Trace trace = run_ensemble(p, local.chain_config(p), algo);
  const Matrix finals = trace.final_iterates();
  if (!finals.allFinite()) {
    return {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::quiet_NaN(), 0};
  }
  return bootstrap_fit_kl(finals, g, cfg.bootstrap, cfg.seed ^ 0x9e3779b97f4a7c15ULL);
}

bool amplitude_given(const CLI::App& app) {
  for (const CLI::App* sub : app.get_subcommands()) {
    if (sub->count("--amplitude") > 0) return true;
  }
  return false;
}

}  // namespace

void cmd_sample(const ExperimentConfig& cfg, std::ostream& log) {
  const auto p = potential_from_json(cfg.target);
  const Trace trace = run_ensemble(*p, cfg.chain_config(*p), cfg.algorithm);
  CsvWriter csv(cfg.output);
  std::vector<std::string> cols = {"chain", "step"};
  for (int i = 1; i <= trace.dimension(); ++i) cols.push_back("x_" + std::to_string(i));
  csv.header(cols);
  for (int c = 0; c < trace.n_chains(); ++c) {
    for (int s = 0; s < trace.stored_count(); ++s) {
      csv.cell(static_cast<long long>(c)).cell(static_cast<long long>(trace.step_index(s)));
      const auto x = trace.at(c, s);
      for (int i = 0; i < x.size(); ++i) csv.cell(x[i]);
      csv.end_row();
    }
  }
  csv.close();
  const EmpiricalMoments em = moments(trace);
  log << "final mean:";
  for (int i = 0; i < em.mean.size(); ++i) log << ' ' << format_double(em.mean[i]);
  log << "\nfinal variance:";
  for (int i = 0; i < em.cov.rows(); ++i) {
    log << ' ' << format_double(em.cov(i, i)) << " (se " << format_double(em.cov_se(i, i)) << ')';
  }
  log << '\n';
  maybe_chart(cfg, {"sample trace", "step", {"x_1"}, false, false, 5000});
}

void cmd_bias_sweep(const ExperimentConfig& cfg, std::ostream& log) {
  const auto p = potential_from_json(cfg.target);
  const GaussianTarget& g = require_gaussian(*p, "bias-sweep");
  const std::vector<double> lam = to_std(g.eigenvalues());
  const double lam_min = g.eigenvalues().minCoeff();
  std::vector<double> grid = cfg.eps_grid.empty()
                                 ? log_grid(1e-2 * lam_min, 3.0 * lam_min, cfg.grid_points)
                                 : cfg.eps_grid;
  check_grid(grid);

  CsvWriter csv(cfg.output);
  std::vector<std::string> cols = {"eps", "kl_theory_pla", "kl_theory_ula", "kl_limit_pla",
                                   "kl_limit_ula"};
  if (cfg.empirical) {
    cols.insert(cols.end(), {"kl_empirical_pla", "se_pla", "kl_empirical_ula", "se_ula"});
  }
  csv.header(cols);

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> fit_eps, fit_theory, fit_emp_eps, fit_emp;
  for (double eps : grid) {
    const double th_pla = theory::kl_bias_pla(lam, eps);
    const double th_ula = theory::kl_bias_ula(lam, eps);
    const double lim_pla = theory::gaussian_kl(theory::pla_limit_gaussian(lam, eps), lam);
    const auto ula_lim = theory::ula_limit_gaussian(lam, eps);
    const double lim_ula = ula_lim ? theory::gaussian_kl(*ula_lim, lam) : inf;
    csv.cell(eps).cell(th_pla).cell(th_ula).cell(lim_pla).cell(lim_ula);
    fit_eps.push_back(eps);
    fit_theory.push_back(th_pla);
    if (cfg.empirical) {
      const auto e_pla = empirical_kl(*p, g, cfg, eps, Algorithm::pla);
      csv.cell(e_pla.value).cell(e_pla.se);
      if (ula_lim) {
        const auto e_ula = empirical_kl(*p, g, cfg, eps, Algorithm::ula);
        csv.cell(e_ula.value).cell(e_ula.se);
      } else {
        csv.cell(inf).cell(std::numeric_limits<double>::quiet_NaN());
      }
      if (e_pla.value > 0.0 && std::isfinite(e_pla.value)) {
        fit_emp_eps.push_back(eps);
        fit_emp.push_back(e_pla.value);
      }
    }
    csv.end_row();
  }
  csv.close();

  auto report = [&](const char* name, const std::vector<double>& e, const std::vector<double>& b) {
    if (e.size() < 4) {
      log << name << ": fewer than 4 usable points, no fit\n";
      return;
    }
    const ScalingFit fit = bias_scaling_fit(e, b);
    log << name << ": slope " << format_double(fit.slope) << ", intercept "
        << format_double(fit.intercept) << ", r2 " << format_double(fit.r_squared)
        << (fit.reliable ? "" : " (unreliable)") << '\n';
  };
  report("theory pla fit", fit_eps, fit_theory);
  if (cfg.empirical) report("empirical pla fit", fit_emp_eps, fit_emp);
  maybe_chart(cfg, {"KL bias vs step size", "eps",
                    {"kl_theory_pla", "kl_theory_ula", "kl_empirical_pla", "kl_empirical_ula"},
                    true, true, 5000});
}

void cmd_bound_check(const ExperimentConfig& cfg, std::ostream& log) {
  const auto p = potential_from_json(cfg.target);
  const GaussianTarget& g = require_gaussian(*p, "bound-check");
  if (cfg.k_max < 0 || cfg.k_stride < 1) throw ConfigError("need k_max >= 0 and k_stride >= 1");
  const std::vector<double> lam = to_std(g.eigenvalues());
  const int n = g.dimension();
  const double L = g.smoothness_L();
  const double alpha = *g.lsi_alpha();
  const double ceiling = theory::kl_step_ceiling(alpha, L, 0.0);

  std::vector<double> grid = cfg.eps_grid;
  if (grid.empty()) {
    if (cfg.grid_points < 1) throw ConfigError("grid_points must be >= 1");
    for (int i = 1; i <= cfg.grid_points; ++i) grid.push_back(ceiling * i / cfg.grid_points);
  }
  check_grid(grid);

  // rho_0 = N(mean, I / L).
  const std::vector<double> init(static_cast<std::size_t>(n), 1.0 / L);
  const double H0 = theory::gaussian_kl(init, lam);

  CsvWriter csv(cfg.output);
  csv.header({"eps", "k", "exact_kl", "bound", "slack"});
  long violations = 0;
  double min_slack = std::numeric_limits<double>::infinity();
  for (double eps : grid) {
    theory::BoundParams bp;
    bp.alpha = alpha;
    bp.L = L;
    bp.M = 0.0;
    bp.n = n;
    bp.eps = eps;
    bp.H0 = H0;
    bp.validate();
    std::vector<double> cov = init;
    for (long k = 0; k <= cfg.k_max; ++k) {
      if (k > 0) cov = theory::gaussian_cov_step(lam, eps, cov);
      if (k % cfg.k_stride != 0 && k != cfg.k_max) continue;
      bp.k = k;
      const double exact = theory::gaussian_kl(cov, lam);
      const double bound = theory::kl_bound_thm1(bp);
      const double slack = bound - exact;
      if (slack < 0.0) ++violations;
      min_slack = std::min(min_slack, slack);
      csv.cell(eps).cell(static_cast<long long>(k)).cell(exact).cell(bound).cell(slack);
      csv.end_row();
    }
  }
  csv.close();
  log << "H0 " << format_double(H0) << ", step ceiling " << format_double(ceiling)
      << ", min slack " << format_double(min_slack) << ", violations " << violations << '\n';
  maybe_chart(cfg, {"exact KL and bound", "k", {"exact_kl", "bound"}, false, true, 20000});
}

void cmd_sde_verify(const ExperimentConfig& cfg, std::ostream& log) {
  const auto p = potential_from_json(cfg.target);
  const int n = p->dimension();
  const double t_end = cfg.t_end ? *cfg.t_end : sde::interpolation_time_limit(*p);
  const sde::SdeScheme scheme = resolve_scheme(cfg.scheme, *p);
  Vector x0 = cfg.x0.empty() ? Vector::Zero(n)
                             : Vector(Eigen::Map<const Vector>(cfg.x0.data(),
                                                               static_cast<Eigen::Index>(cfg.x0.size())));
  if (x0.size() != n) throw ConfigError("x0 has the wrong dimension");
  if (cfg.substeps.empty()) throw ConfigError("substeps must not be empty");

  const sde::SdeStudy study =
      sde::run_sde_study(*p, x0, t_end, cfg.substeps, cfg.paths, cfg.seed, scheme, cfg.threads);
  const int fine = *std::max_element(cfg.substeps.begin(), cfg.substeps.end());
  const sde::SdeVerification zero = sde::verify_sde_representation(
      *p, x0, t_end, cfg.substeps, sde::zero_brownian_path(n, t_end, fine), scheme);

  CsvWriter csv(cfg.output);
  csv.header({"path", "noise", "substeps", "error", "ratio"});
  auto rows = [&](long long path, const char* noise, const sde::SdeVerification& v) {
    for (std::size_t i = 0; i < v.errors.size(); ++i) {
      csv.cell(path).cell(std::string(noise)).cell(static_cast<long long>(v.substeps[i]))
          .cell(v.errors[i])
          .cell(i == 0 ? std::numeric_limits<double>::quiet_NaN() : v.ratios[i - 1]);
      csv.end_row();
    }
  };
  rows(0, "zero", zero);
  for (std::size_t i = 0; i < study.paths.size(); ++i) {
    rows(static_cast<long long>(i), "brownian", study.paths[i]);
  }
  csv.close();
  log << "scheme " << (scheme == sde::SdeScheme::milstein ? "milstein" : "euler_maruyama")
      << ", t_end " << format_double(t_end) << ", monotone "
      << format_double(study.fraction_monotone()) << ", ratios in [1.6, 2.6] "
      << format_double(study.fraction_ratios_within(1.6, 2.6)) << '\n';
  maybe_chart(cfg, {"pathwise error vs substeps", "substeps", {"error"}, true, true, 5000});
}

void cmd_prox_bench(const ExperimentConfig& cfg, std::ostream& log) {
  const auto p = potential_from_json(cfg.target);
  const int n = p->dimension();
  if (cfg.calls < 1) throw ConfigError("calls must be >= 1");
  check_prox_preconditions(*p, cfg.eps);

  std::vector<Vector> inputs;
  CounterRng rng(cfg.seed, 0);
  for (int c = 0; c < cfg.calls; ++c) {
    Vector y(n);
    rng.fill_normal(y);
    inputs.push_back(3.0 * y);
  }

  CsvWriter csv(cfg.output);
  csv.header({"solver", "call", "iterations", "residual", "converged", "fell_back"});
  for (ProxSolver solver : {ProxSolver::newton, ProxSolver::gradient_descent}) {
    ProxConfig pc = cfg.prox;
    pc.solver = solver;
    const std::string name = solver == ProxSolver::newton ? "newton" : "gradient_descent";
    ProxWorkspace ws(n);
    Vector x(n);
    long total_iter = 0, failures = 0;
    const auto start = std::chrono::steady_clock::now();
    for (int c = 0; c < cfg.calls; ++c) {
      const ProxStatus st = prox_solve_into(*p, inputs[static_cast<std::size_t>(c)], cfg.eps, pc, ws, x);
      total_iter += st.iterations;
      failures += st.converged ? 0 : 1;
      csv.cell(name).cell(static_cast<long long>(c)).cell(static_cast<long long>(st.iterations))
          .cell(st.residual).cell(static_cast<long long>(st.converged))
          .cell(static_cast<long long>(st.fell_back));
      csv.end_row();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log << name << ": " << cfg.calls << " calls, " << format_double(secs * 1e6 / cfg.calls)
        << " us/call, mean iterations "
        << format_double(static_cast<double>(total_iter) / cfg.calls) << ", unconverged "
        << failures << '\n';
  }
  csv.close();
  maybe_chart(cfg, {"prox iterations per call", "call", {"iterations"}, false, false, 5000});
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Proximal and unadjusted Langevin sampling experiments"};
  app.require_subcommand(1);

  ExperimentConfig cfg;
  std::string config_path, target_kind;
  std::vector<double> eigs;
  double amplitude = 0.5;
  std::string algorithm = "pla", solver, tol_mode;
  bool dump = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config; its fields override flags");
    sub->add_option("--target", target_kind, "gaussian | perturbed_quadratic");
    sub->add_option("--eigs", eigs, "covariance eigenvalues (implies gaussian)")->delimiter(',');
    sub->add_option("--amplitude", amplitude, "a in x^2/2 + a cos x (implies perturbed_quadratic)");
    sub->add_option("--algorithm", algorithm, "pla | ula");
    sub->add_option("--eps", cfg.eps, "step size");
    sub->add_option("--steps", cfg.steps, "steps per chain");
    sub->add_option("--chains", cfg.chains, "number of chains");
    sub->add_option("--seed", cfg.seed, "master seed");
    sub->add_option("--thinning", cfg.thinning, "keep every k-th step");
    sub->add_option("--threads", cfg.threads, "worker threads (0: auto)");
    sub->add_option("--init", cfg.init, "point_mass | gaussian_at_stationary | prox_pushforward");
    sub->add_option("--x0", cfg.x0, "start point")->delimiter(',');
    sub->add_option("--prox-tol", cfg.prox.tol, "prox residual tolerance");
    sub->add_option("--prox-tol-mode", tol_mode, "relative | absolute");
    sub->add_option("--prox-max-iter", cfg.prox.max_iter, "prox iteration cap");
    sub->add_option("--prox-solver", solver, "newton | gradient_descent");
    sub->add_option("--eps-grid", cfg.eps_grid, "explicit step-size grid")->delimiter(',');
    sub->add_option("--grid-points", cfg.grid_points, "points in the generated grid");
    sub->add_option("--k-max", cfg.k_max, "largest iteration count");
    sub->add_option("--k-stride", cfg.k_stride, "row spacing in k");
    sub->add_flag("--empirical", cfg.empirical, "run ensembles alongside the closed forms");
    sub->add_option("--bootstrap", cfg.bootstrap, "bootstrap replicates");
    sub->add_option("--substeps", cfg.substeps, "discretisation counts")->delimiter(',');
    sub->add_option("--paths", cfg.paths, "Brownian paths");
    sub->add_option("--t-end", cfg.t_end, "interpolation horizon");
    sub->add_option("--scheme", cfg.scheme, "auto | euler_maruyama | milstein");
    sub->add_option("--calls", cfg.calls, "prox calls per solver");
    sub->add_option("-o,--output", cfg.output, "CSV path");
    sub->add_flag("--chart", cfg.chart, "also write an SVG chart next to the CSV");
    sub->add_flag("--dump-config", dump, "print the effective config as JSON");
  };
  struct Command {
    const char* name;
    const char* help;
    void (*run)(const ExperimentConfig&, std::ostream&);
  };
  const Command commands[] = {
      {"sample", "run an ensemble and write its trace", cmd_sample},
      {"bias-sweep", "KL bias of PLA and ULA across step sizes", cmd_bias_sweep},
      {"bound-check", "exact Gaussian KL against the convergence bound", cmd_bound_check},
      {"sde-verify", "strong convergence of the interpolation SDE", cmd_sde_verify},
      {"prox-bench", "time the proximal solvers", cmd_prox_bench},
  };
  for (const auto& c : commands) add_common(app.add_subcommand(c.name, c.help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (target_kind.empty()) {
      if (!eigs.empty()) target_kind = "gaussian";
      else if (amplitude_given(app)) target_kind = "perturbed_quadratic";
    }
    if (!target_kind.empty()) {
      if (target_kind == "gaussian") {
        cfg.target = {{"kind", "gaussian"}, {"eigs", eigs.empty() ? std::vector<double>{1.0} : eigs}};
      } else if (target_kind == "perturbed_quadratic") {
        cfg.target = {{"kind", "perturbed_quadratic"}, {"a", amplitude}};
      } else {
        throw ConfigError("unknown target '" + target_kind + "'");
      }
    }
    cfg.algorithm = algorithm_from_string(algorithm);
    if (!solver.empty()) apply_json(cfg, {{"schema_version", kSchemaVersion}, {"prox", {{"solver", solver}}}});
    if (!tol_mode.empty()) apply_json(cfg, {{"schema_version", kSchemaVersion}, {"prox", {{"tol_mode", tol_mode}}}});
    if (!config_path.empty()) cfg = load_config_file(config_path, cfg);
    if (dump) std::cout << cfg.to_json().dump(2) << '\n';

    for (const auto& c : commands) {
      if (app.got_subcommand(c.name)) c.run(cfg, std::cout);
    }
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const PreconditionError& e) {
    std::cerr << "invalid parameters: " << e.what() << '\n';
    return kConfigError;
  } catch (const CapabilityError& e) {
    std::cerr << "invalid parameters: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
}

}  // namespace pla::cli
