#pragma once

#include <cstdint>
#include <random>

namespace qie {

/// Platform-stable uniform double in [0, 1) from a seeded 64-bit engine.
/// (The standard distributions are implementation-defined; this is not.)
inline double unit_uniform(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * unit_uniform(gen);
}

/// Deterministic standard normal via Box-Muller on the stable uniform.
inline double unit_normal(std::mt19937_64& gen) {
  double u = 0.0;
  while (u <= 0.0) u = unit_uniform(gen);
  const double v = unit_uniform(gen);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586476925287 * v);
}

}  // namespace qie
