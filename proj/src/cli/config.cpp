#include "pla/cli/config.hpp"

#include <fstream>
#include <sstream>

#include "pla/errors.hpp"

namespace pla::cli {

namespace {

using nlohmann::json;

template <typename T>
T read(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config field '" + key + "': " + e.what());
  }
}

std::string solver_name(ProxSolver s) {
  return s == ProxSolver::newton ? "newton" : "gradient_descent";
}

void apply_prox(ProxConfig& prox, const json& j) {
  if (!j.is_object()) throw ConfigError("config field 'prox' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "tol") {
      prox.tol = read<double>(value, "prox.tol");
    } else if (key == "tol_mode") {
      const auto mode = read<std::string>(value, "prox.tol_mode");
      if (mode == "relative") prox.tol_mode = ToleranceMode::relative;
      else if (mode == "absolute") prox.tol_mode = ToleranceMode::absolute;
      else throw ConfigError("prox.tol_mode must be 'relative' or 'absolute'");
    } else if (key == "max_iter") {
      prox.max_iter = read<int>(value, "prox.max_iter");
    } else if (key == "solver") {
      const auto s = read<std::string>(value, "prox.solver");
      if (s == "newton") prox.solver = ProxSolver::newton;
      else if (s == "gradient_descent") prox.solver = ProxSolver::gradient_descent;
      else throw ConfigError("prox.solver must be 'newton' or 'gradient_descent'");
    } else {
      throw ConfigError("unknown config field 'prox." + key + "'");
    }
  }
}

}  // namespace

ChainConfig ExperimentConfig::chain_config(const Potential& p) const {
  ChainConfig c;
  c.eps = eps;
  c.steps = steps;
  c.n_chains = chains;
  c.seed = seed;
  c.thinning = thinning;
  c.threads = threads;
  c.prox = prox;
  Vector start = Vector::Zero(p.dimension());
  if (!x0.empty()) {
    if (static_cast<int>(x0.size()) != p.dimension()) throw ConfigError("x0 has the wrong dimension");
    start = Eigen::Map<const Vector>(x0.data(), static_cast<Eigen::Index>(x0.size()));
  }
  if (init == "point_mass") {
    c.init = PointMass{start};
  } else if (init == "gaussian_at_stationary") {
    c.init = GaussianAtStationary{start};
  } else if (init == "prox_pushforward") {
    c.init = ProxPushforward{start};
  } else {
    throw ConfigError("unknown init '" + init + "'");
  }
  return c;
}

json ExperimentConfig::to_json() const {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["target"] = target;
  j["algorithm"] = to_string(algorithm);
  j["eps"] = eps;
  j["steps"] = steps;
  j["chains"] = chains;
  j["seed"] = seed;
  j["thinning"] = thinning;
  j["threads"] = threads;
  j["init"] = init;
  j["x0"] = x0;
  j["prox"] = {{"tol", prox.tol},
               {"tol_mode", prox.tol_mode == ToleranceMode::relative ? "relative" : "absolute"},
               {"max_iter", prox.max_iter},
               {"solver", solver_name(prox.solver)}};
  j["eps_grid"] = eps_grid;
  j["grid_points"] = grid_points;
  j["k_max"] = k_max;
  j["k_stride"] = k_stride;
  j["empirical"] = empirical;
  j["bootstrap"] = bootstrap;
  j["substeps"] = substeps;
  j["paths"] = paths;
  j["t_end"] = t_end ? json(*t_end) : json(nullptr);
  j["scheme"] = scheme;
  j["calls"] = calls;
  j["output"] = output;
  j["chart"] = chart;
  return j;
}

void apply_json(ExperimentConfig& cfg, const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (!j.contains("schema_version")) throw ConfigError("config is missing 'schema_version'");
  if (read<int>(j.at("schema_version"), "schema_version") != kSchemaVersion) {
    throw ConfigError("unsupported schema_version (expected " +
                      std::to_string(kSchemaVersion) + ")");
  }
  for (const auto& [key, value] : j.items()) {
    if (key == "schema_version") continue;
    if (key == "target") {
      if (!value.is_object()) throw ConfigError("config field 'target' must be an object");
      cfg.target = value;
    } else if (key == "algorithm") {
      cfg.algorithm = algorithm_from_string(read<std::string>(value, key));
    } else if (key == "eps") {
      cfg.eps = read<double>(value, key);
    } else if (key == "steps") {
      cfg.steps = read<int>(value, key);
    } else if (key == "chains") {
      cfg.chains = read<int>(value, key);
    } else if (key == "seed") {
      cfg.seed = read<std::uint64_t>(value, key);
    } else if (key == "thinning") {
      cfg.thinning = read<int>(value, key);
    } else if (key == "threads") {
      cfg.threads = read<int>(value, key);
    } else if (key == "init") {
      cfg.init = read<std::string>(value, key);
    } else if (key == "x0") {
      cfg.x0 = read<std::vector<double>>(value, key);
    } else if (key == "prox") {
      apply_prox(cfg.prox, value);
    } else if (key == "eps_grid") {
      cfg.eps_grid = read<std::vector<double>>(value, key);
    } else if (key == "grid_points") {
      cfg.grid_points = read<int>(value, key);
    } else if (key == "k_max") {
      cfg.k_max = read<long>(value, key);
    } else if (key == "k_stride") {
      cfg.k_stride = read<long>(value, key);
    } else if (key == "empirical") {
      cfg.empirical = read<bool>(value, key);
    } else if (key == "bootstrap") {
      cfg.bootstrap = read<int>(value, key);
    } else if (key == "substeps") {
      cfg.substeps = read<std::vector<int>>(value, key);
    } else if (key == "paths") {
      cfg.paths = read<int>(value, key);
    } else if (key == "t_end") {
      if (value.is_null()) cfg.t_end.reset();
      else cfg.t_end = read<double>(value, key);
    } else if (key == "scheme") {
      cfg.scheme = read<std::string>(value, key);
    } else if (key == "calls") {
      cfg.calls = read<int>(value, key);
    } else if (key == "output") {
      cfg.output = read<std::string>(value, key);
    } else if (key == "chart") {
      cfg.chart = read<bool>(value, key);
    } else {
      throw ConfigError("unknown config field '" + key + "'");
    }
  }
}

ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  apply_json(base, j);
  return base;
}

sde::SdeScheme resolve_scheme(const std::string& name, const Potential& p) {
  if (name == "euler_maruyama") return sde::SdeScheme::euler_maruyama;
  if (name == "milstein") return sde::SdeScheme::milstein;
  if (name == "auto") {
    return p.dimension() == 1 ? sde::SdeScheme::milstein : sde::SdeScheme::euler_maruyama;
  }
  throw ConfigError("scheme must be 'auto', 'euler_maruyama' or 'milstein'");
}

}  // namespace pla::cli
