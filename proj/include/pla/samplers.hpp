#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "pla/prox.hpp"
#include "pla/rng.hpp"
#include "pla/targets.hpp"
#include "pla/types.hpp"

namespace pla {

enum class Algorithm { pla, ula };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

/// Every chain starts at x0.
struct PointMass {
  Vector x0;
};

/// rho_0 = N(x*, (1/L) I) around a stationary point found by gradient
/// descent from `search_start` (zeros when empty).
struct GaussianAtStationary {
  Vector search_start;
};

/// rho_0 is the law of x0 solving x0 + eps grad f(x0) = x~ with
/// x~ ~ N(x*, 2 eps I). Requires eps < 1/L.
struct ProxPushforward {
  Vector search_start;
};

using InitSpec = std::variant<PointMass, GaussianAtStationary, ProxPushforward>;

struct ChainConfig {
  double eps = 0.1;
  int steps = 0;
  int n_chains = 1;
  std::uint64_t seed = 0;
  InitSpec init = PointMass{};
  int thinning = 1;
  ProxConfig prox;
  int threads = 0;  // 0: hardware concurrency, capped by PLA_THREADS

  void validate(const Potential& p) const;
};

/// Iterates of an ensemble, stored chain-major: chain c, stored slot s,
/// coordinate i. Slot s holds step `step_index(s)`; step 0 and the final
/// step are always kept.
class Trace {
 public:
  Trace(int n_chains, std::vector<int> stored_steps, int dimension,
        ChainConfig config, Algorithm algorithm);

  int n_chains() const { return n_chains_; }
  int stored_count() const { return static_cast<int>(steps_.size()); }
  int dimension() const { return dimension_; }
  int step_index(int slot) const { return steps_[static_cast<std::size_t>(slot)]; }
  const std::vector<int>& stored_steps() const { return steps_; }
  const std::vector<std::uint64_t>& stream_ids() const { return streams_; }
  const ChainConfig& config() const { return config_; }
  Algorithm algorithm() const { return algorithm_; }

  Eigen::Map<const Vector> at(int chain, int slot) const;
  Eigen::Map<Vector> at(int chain, int slot);

  /// Row c is chain c at its final stored step.
  Matrix final_iterates() const;
  /// Row c is chain c at stored slot s.
  Matrix slot_iterates(int slot) const;

  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t offset(int chain, int slot) const;

  int n_chains_;
  std::vector<int> steps_;
  int dimension_;
  std::vector<std::uint64_t> streams_;
  ChainConfig config_;
  Algorithm algorithm_;
  std::vector<double> data_;
};

/// One PLA step: z ~ N(0, I) from `rng` (exactly n normal draws), then the
/// proximal solve at x + sqrt(2 eps) z.
Vector pla_step(const Potential& p, ConstVectorRef x, double eps,
                CounterRng& rng, const ProxConfig& prox = {});

/// One ULA step x - eps grad f(x) + sqrt(2 eps) z with the same draws as
/// pla_step, so equal seeds couple the two chains.
Vector ula_step(const Potential& p, ConstVectorRef x, double eps,
                CounterRng& rng);

/// Runs n_chains independent chains; chain c uses stream c of cfg.seed, so the
/// result does not depend on the worker count.
Trace run_ensemble(const Potential& p, const ChainConfig& cfg, Algorithm algo);

/// Worker count after applying PLA_THREADS and hardware limits.
int resolve_thread_count(int requested);

}  // namespace pla
