#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "eprsim/common.hpp"

namespace eprsim {

/// splitmix64 step, used to derive decorrelated stream seeds.
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic counting RNG.  Uniform doubles are built from the top 53
/// bits of mt19937_64 output, so streams are reproducible bit-for-bit for a
/// given seed independent of the standard library's distribution code.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() {  // in (0, 1]
    const std::uint64_t r = engine_();
    return (static_cast<double>(r >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Poisson sample by counting unit-exponential arrivals up to mean.
  /// Exact for any mean >= 0 and free of underflow.
  std::uint64_t poisson(double mean) {
    if (!(mean >= 0.0)) throw NumericalError("poisson mean must be non-negative");
    if (mean == 0.0) return 0;
    std::uint64_t n = 0;
    double acc = -std::log(uniform());
    while (acc <= mean) {
      ++n;
      acc -= std::log(uniform());
    }
    return n;
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace eprsim
