#include "pla/samplers.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <optional>
#include <thread>

#include "pla/errors.hpp"

namespace pla {

std::string to_string(Algorithm a) { return a == Algorithm::pla ? "pla" : "ula"; }

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "pla") return Algorithm::pla;
  if (s == "ula") return Algorithm::ula;
  throw ConfigError("unknown algorithm '" + s + "' (expected pla or ula)");
}

void ChainConfig::validate(const Potential& p) const {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw PreconditionError("chain: eps must be positive and finite");
  }
  if (steps < 0) throw PreconditionError("chain: steps must be >= 0");
  if (n_chains < 1) throw PreconditionError("chain: n_chains must be >= 1");
  if (thinning < 1) throw PreconditionError("chain: thinning must be >= 1");
  prox.validate();
  const int n = p.dimension();
  if (const auto* pm = std::get_if<PointMass>(&init)) {
    if (pm->x0.size() != 0 && pm->x0.size() != n) {
      throw PreconditionError("chain: x0 has wrong dimension");
    }
  }
  if (std::holds_alternative<ProxPushforward>(init) &&
      !(eps * p.smoothness_L() < 1.0)) {
    throw PreconditionError("chain: prox_pushforward init needs eps < 1/L");
  }
}

// ---------------------------------------------------------------------------
// Trace

Trace::Trace(int n_chains, std::vector<int> stored_steps, int dimension,
             ChainConfig config, Algorithm algorithm)
    : n_chains_(n_chains),
      steps_(std::move(stored_steps)),
      dimension_(dimension),
      streams_(static_cast<std::size_t>(n_chains)),
      config_(std::move(config)),
      algorithm_(algorithm),
      data_(static_cast<std::size_t>(n_chains) * steps_.size() *
            static_cast<std::size_t>(dimension)) {
  for (int c = 0; c < n_chains; ++c) streams_[static_cast<std::size_t>(c)] = static_cast<std::uint64_t>(c);
}

std::size_t Trace::offset(int chain, int slot) const {
  return (static_cast<std::size_t>(chain) * steps_.size() +
          static_cast<std::size_t>(slot)) *
         static_cast<std::size_t>(dimension_);
}

Eigen::Map<const Vector> Trace::at(int chain, int slot) const {
  return Eigen::Map<const Vector>(data_.data() + offset(chain, slot), dimension_);
}

Eigen::Map<Vector> Trace::at(int chain, int slot) {
  return Eigen::Map<Vector>(data_.data() + offset(chain, slot), dimension_);
}

Matrix Trace::slot_iterates(int slot) const {
  Matrix out(n_chains_, dimension_);
  for (int c = 0; c < n_chains_; ++c) out.row(c) = at(c, slot).transpose();
  return out;
}

Matrix Trace::final_iterates() const { return slot_iterates(stored_count() - 1); }

// ---------------------------------------------------------------------------
// Single steps

Vector pla_step(const Potential& p, ConstVectorRef x, double eps,
                CounterRng& rng, const ProxConfig& prox) {
  Vector z(p.dimension());
  rng.fill_normal(z);
  const Vector y = x + std::sqrt(2.0 * eps) * z;
  return prox_step(p, y, eps, prox).x;
}

Vector ula_step(const Potential& p, ConstVectorRef x, double eps,
                CounterRng& rng) {
  Vector z(p.dimension());
  rng.fill_normal(z);
  return x - eps * p.gradient(x) + std::sqrt(2.0 * eps) * z;
}

// ---------------------------------------------------------------------------
// Ensembles

int resolve_thread_count(int requested) {
  int threads = requested > 0
                    ? requested
                    : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("PLA_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) threads = std::min(threads, cap);
  }
  return std::max(1, threads);
}

namespace {

std::vector<int> stored_steps_for(int steps, int thinning) {
  std::vector<int> out;
  for (int s = 0; s <= steps; s += thinning) out.push_back(s);
  if (out.back() != steps) out.push_back(steps);
  return out;
}

// Resolved starting law shared by all chains.
struct InitialLaw {
  enum class Kind { point, gaussian, pushforward } kind;
  Vector center;
  double scale = 0.0;  // standard deviation of the Gaussian part
};

InitialLaw resolve_init(const Potential& p, const ChainConfig& cfg) {
  const int n = p.dimension();
  auto stationary = [&](const Vector& start) {
    const Vector from = start.size() == 0 ? Vector::Zero(n) : start;
    return find_stationary_point(p, from, 1e-10);
  };
  return std::visit(
      [&](const auto& spec) -> InitialLaw {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          return {InitialLaw::Kind::point,
                  spec.x0.size() == 0 ? Vector::Zero(n) : spec.x0, 0.0};
        } else if constexpr (std::is_same_v<T, GaussianAtStationary>) {
          return {InitialLaw::Kind::gaussian, stationary(spec.search_start),
                  std::sqrt(1.0 / p.smoothness_L())};
        } else {
          return {InitialLaw::Kind::pushforward, stationary(spec.search_start),
                  std::sqrt(2.0 * cfg.eps)};
        }
      },
      cfg.init);
}

class ChainRunner {
 public:
  ChainRunner(const Potential& p, const ChainConfig& cfg, Algorithm algo,
              const InitialLaw& init)
      : p_(p),
        cfg_(cfg),
        algo_(algo),
        init_(init),
        ws_(p.dimension()),
        x_(p.dimension()),
        y_(p.dimension()),
        z_(p.dimension()),
        g_(p.dimension()),
        noise_scale_(std::sqrt(2.0 * cfg.eps)) {}

  void run(int chain, Trace& trace) {
    CounterRng rng(cfg_.seed, static_cast<std::uint64_t>(chain));
    draw_initial(rng);
    int slot = 0;
    const auto& stored = trace.stored_steps();
    if (stored[0] == 0) trace.at(chain, slot++) = x_;
    for (int k = 1; k <= cfg_.steps; ++k) {
      step(rng);
      if (slot < trace.stored_count() && stored[static_cast<std::size_t>(slot)] == k) {
        trace.at(chain, slot++) = x_;
      }
    }
  }

 private:
  void solve_prox(const Vector& y, double eps) {
    const ProxStatus s = prox_solve_into(p_, y, eps, cfg_.prox, ws_, x_);
    if (!s.converged) {
      throw ConvergenceError("prox did not converge (residual " +
                                 std::to_string(s.residual) + ")",
                             x_, s.residual);
    }
  }

  void draw_initial(CounterRng& rng) {
    x_ = init_.center;
    if (init_.kind == InitialLaw::Kind::point) return;
    rng.fill_normal(z_);
    y_ = init_.center + init_.scale * z_;
    if (init_.kind == InitialLaw::Kind::gaussian) {
      x_ = y_;
    } else {
      solve_prox(y_, cfg_.eps);
    }
  }

  void step(CounterRng& rng) {
    rng.fill_normal(z_);
    if (algo_ == Algorithm::pla) {
      y_ = x_ + noise_scale_ * z_;
      solve_prox(y_, cfg_.eps);
    } else {
      p_.gradient_into(x_, g_);
      x_ += noise_scale_ * z_ - cfg_.eps * g_;
    }
  }

  const Potential& p_;
  const ChainConfig& cfg_;
  Algorithm algo_;
  const InitialLaw& init_;
  ProxWorkspace ws_;
  Vector x_, y_, z_, g_;
  double noise_scale_;
};

}  // namespace

Trace run_ensemble(const Potential& p, const ChainConfig& cfg, Algorithm algo) {
  cfg.validate(p);
  const InitialLaw init = resolve_init(p, cfg);
  Trace trace(cfg.n_chains, stored_steps_for(cfg.steps, cfg.thinning),
              p.dimension(), cfg, algo);

  const int workers = std::min(resolve_thread_count(cfg.threads), cfg.n_chains);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.n_chains));
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};

  auto work = [&] {
    ChainRunner runner(p, cfg, algo, init);
    for (int c = next++; c < cfg.n_chains && !failed; c = next++) {
      try {
        runner.run(c, trace);
      } catch (...) {
        errors[static_cast<std::size_t>(c)] = std::current_exception();
        failed = true;
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  for (std::size_t c = 0; c < errors.size(); ++c) {
    if (!errors[c]) continue;
    try {
      std::rethrow_exception(errors[c]);
    } catch (const std::exception& e) {
      throw ChainError(c, e.what());
    }
  }
  return trace;
}

}  // namespace pla
