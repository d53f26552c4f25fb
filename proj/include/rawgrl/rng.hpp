#pragma once

#include <cstdint>
#include <random>

namespace rawgrl {

using Rng = std::mt19937_64;

// Named substreams, so that runs sharing a master seed draw independent
// randomness per purpose.
enum class Stream : std::uint64_t {
  Realization = 1,
  Simulation = 2,
  Rounding = 3,
  Exploration = 4,
  Init = 5,
  Mobility = 6,
  Baseline = 7,
  Evaluation = 8,
  Arrivals = 9,
  Backoff = 10,
  Decode = 11,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Counter-based seed derivation: same (master, stream, index) always gives the
// same seed, independent of evaluation order.
inline std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index = 0) {
  return splitmix64(splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(stream))) + index);
}

inline Rng make_rng(std::uint64_t master, Stream stream, std::uint64_t index = 0) {
  return Rng(derive_seed(master, stream, index));
}

}  // namespace rawgrl
