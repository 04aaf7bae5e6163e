#include "startnet/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace startnet {

double Rng::uniform() {
  // 53 random bits onto [0, 1).
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (lo > hi) throw std::invalid_argument("Rng::uniform_int: lo > hi");
  const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
  if (range == 0) return static_cast<std::int64_t>(engine_());  // full 64-bit span
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
  std::uint64_t v = engine_();
  while (v >= limit) v = engine_();
  return lo + static_cast<std::int64_t>(v % range);
}

std::int64_t Rng::geometric(double mean) {
  if (!(mean >= 1.0)) throw std::invalid_argument("Rng::geometric: mean must be >= 1");
  if (mean == 1.0) return 1;
  const double p = 1.0 / mean;
  const double u = uniform();
  const double k = 1.0 + std::floor(std::log1p(-u) / std::log1p(-p));
  return k < 1.0 ? 1 : static_cast<std::int64_t>(k);
}

namespace {
std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t state = seed;
  std::uint64_t h = splitmix64(state);
  state ^= stream * 0xd1342543de82ef95ULL;
  h ^= splitmix64(state);
  state ^= index * 0xaf251af3b0f025b5ULL;
  h ^= splitmix64(state);
  return h;
}

Rng derive_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return Rng(mix_seed(seed, stream, index));
}

}  // namespace startnet
