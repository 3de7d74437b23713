#pragma once

#include <iosfwd>

#include "pla/cli/config.hpp"

namespace pla::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericalError = 3 };

void cmd_sample(const ExperimentConfig& cfg, std::ostream& log);
void cmd_bias_sweep(const ExperimentConfig& cfg, std::ostream& log);
void cmd_bound_check(const ExperimentConfig& cfg, std::ostream& log);
void cmd_sde_verify(const ExperimentConfig& cfg, std::ostream& log);
void cmd_prox_bench(const ExperimentConfig& cfg, std::ostream& log);

/// Full command line entry point; maps exceptions to exit codes.
int run_cli(int argc, char** argv);

}  // namespace pla::cli
