#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace eprsim {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid or inconsistent user-supplied configuration (CLI exit code 2).
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

/// Malformed external data such as a scan CSV (CLI exit code 3).
class DataError : public Error {
public:
  explicit DataError(const std::string& what) : Error(what) {}
};

/// Numerical degeneracy: empty densities, over-corrections, degenerate
/// curves (CLI exit code 4).
class NumericalError : public Error {
public:
  explicit NumericalError(const std::string& what) : Error(what) {}
};

/// Wavenumber k = 2*pi/lambda in rad/mm for a wavelength given in nm.
inline double wavenumber_invmm(double wavelength_nm) {
  return kTwoPi / (wavelength_nm * 1e-6);
}

inline std::size_t next_pow2(double x) {
  std::size_t n = 1;
  while (static_cast<double>(n) < x) n *= 2;
  return n;
}

}  // namespace eprsim
