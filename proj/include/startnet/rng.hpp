#pragma once

#include <cstdint>
#include <random>

namespace startnet {

/// Deterministic random source. The engine is std::mt19937_64 (bit-exact by
/// the standard); all distribution transforms are hand-rolled so that streams
/// are identical across standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1).
  double uniform();
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller (pairs cached).
  double normal();

  /// Uniform integer in [lo, hi], inclusive, rejection sampled.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Geometric on {1, 2, ...} with the given mean (inversion method).
  std::int64_t geometric(double mean);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// splitmix64-style mixing of (seed, stream, index) into one 64-bit seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

/// Independent substream keyed by (seed, stream, index).
Rng derive_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

}  // namespace startnet
