#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include "pla/types.hpp"

namespace pla {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3"). Pure function of (counter, key).
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

/// Counter-based generator. The key is the 64-bit seed and the upper half of
/// the counter is the stream id, so streams for distinct ids never overlap
/// and any stream can be reconstructed without touching the others.
///
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  /// Uniform on the open interval (0, 1).
  double uniform();

  /// Standard normal via Box-Muller; the second variate of each pair is
  /// cached, so n calls always leave the generator in the same state.
  double normal();

  void fill_normal(VectorRef out);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t normals_drawn() const { return normals_drawn_; }

 private:
  std::uint32_t next_word();

  std::uint64_t seed_;
  std::uint64_t stream_;
  PhiloxKey key_;
  std::uint64_t block_ = 0;
  PhiloxCounter buffer_{};
  int position_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
  std::uint64_t normals_drawn_ = 0;
};

}  // namespace pla
