#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace mgrestore {

// All stochastic decisions in the library draw from this engine. The helpers
// below avoid std::uniform_*_distribution so that a given seed produces the
// same trajectory with every standard library implementation.
using Rng = std::mt19937_64;

// Uniform integer in [0, n) by rejection sampling. n must be positive.
template <class URBG>
std::size_t uniform_index(URBG& rng, std::size_t n) {
  const std::uint64_t range = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % range);
  std::uint64_t draw = 0;
  do {
    draw = static_cast<std::uint64_t>(rng());
  } while (draw >= limit);
  return static_cast<std::size_t>(draw % range);
}

// Uniform real in [0, 1) with 53 random bits.
template <class URBG>
double uniform_unit(URBG& rng) {
  return static_cast<double>(static_cast<std::uint64_t>(rng()) >> 11) * 0x1.0p-53;
}

template <class URBG>
double uniform_real(URBG& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(rng);
}

}  // namespace mgrestore
