#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pla/prox.hpp"
#include "pla/samplers.hpp"
#include "pla/sde_lab.hpp"

namespace pla::cli {

inline constexpr int kSchemaVersion = 1;

/// Everything a subcommand needs. Round-trips through JSON; the CSV output
/// is a function of this struct alone.
struct ExperimentConfig {
  nlohmann::json target = {{"kind", "gaussian"}, {"eigs", {1.0}}};
  Algorithm algorithm = Algorithm::pla;

  // chains
  double eps = 0.1;
  int steps = 100;
  int chains = 1000;
  std::uint64_t seed = 0;
  int thinning = 1;
  int threads = 0;
  std::string init = "point_mass";  // point_mass | gaussian_at_stationary | prox_pushforward
  std::vector<double> x0;           // start point; zeros when empty
  ProxConfig prox;

  // sweeps
  std::vector<double> eps_grid;     // explicit grid; overrides the generated one
  int grid_points = 20;
  long k_max = 500;
  long k_stride = 1;

  // bias-sweep
  bool empirical = false;
  int bootstrap = 50;

  // sde-verify
  std::vector<int> substeps = {100, 200, 400};
  int paths = 32;
  std::optional<double> t_end;      // interpolation time limit when empty
  std::string scheme = "auto";      // auto | euler_maruyama | milstein

  // prox-bench
  int calls = 1000;

  std::string output = "out.csv";
  bool chart = false;

  ChainConfig chain_config(const Potential& p) const;
  nlohmann::json to_json() const;
};

/// Overwrites the fields present in `j`. Unknown keys, a missing or wrong
/// schema_version and ill-typed values are ConfigErrors.
void apply_json(ExperimentConfig& cfg, const nlohmann::json& j);

ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base);

sde::SdeScheme resolve_scheme(const std::string& name, const Potential& p);

}  // namespace pla::cli
