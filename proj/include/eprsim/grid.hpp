#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>

#include "eprsim/common.hpp"
#include "eprsim/model.hpp"

namespace eprsim {

/// Uniform centered lattice: point i sits at center + (i - n/2)*spacing.
/// n is a power of two so the axis can be Fourier transformed; the dual
/// axis has spacing 2*pi/(n*spacing).
struct AxisGrid {
  std::size_t n = 64;
  double spacing = 1.0;
  double center = 0.0;

  AxisGrid() = default;
  AxisGrid(std::size_t n_, double spacing_, double center_ = 0.0)
      : n(n_), spacing(spacing_), center(center_) {
    if (n < 64 || (n & (n - 1)) != 0)
      throw ConfigError("grid size must be a power of two >= 64");
    if (!(spacing > 0.0)) throw ConfigError("grid spacing must be positive");
  }

  double point(std::size_t i) const {
    return center + (static_cast<double>(i) - static_cast<double>(n) / 2.0) * spacing;
  }
  double min() const { return point(0); }
  double max() const { return point(n - 1); }
  double extent() const { return static_cast<double>(n) * spacing; }

  /// Conjugate grid under the unitary centered transform (always centered
  /// at zero; transforms are only defined for zero-centered axes).
  AxisGrid dual() const { return AxisGrid(n, kTwoPi / extent(), 0.0); }

  /// Index of the lattice point nearest to x, ties toward the center line.
  std::size_t nearest_index(double x) const {
    double r = (x - center) / spacing + static_cast<double>(n) / 2.0;
    if (r < 0.0) r = 0.0;
    const double top = static_cast<double>(n - 1);
    if (r > top) r = top;
    std::size_t lo = static_cast<std::size_t>(r);
    if (lo + 1 >= n) return n - 1;
    const double dlo = x - point(lo), dhi = point(lo + 1) - x;
    if (dlo < dhi) return lo;
    if (dhi < dlo) return lo + 1;
    // tie: prefer the side nearer the center index
    return (lo >= n / 2) ? lo : lo + 1;
  }

  bool contains(double x) const { return x >= min() && x <= max(); }

  bool operator==(const AxisGrid&) const = default;
};

struct GridOptions {
  double oversample = 4.0;  // coverage multiple of each factor scale
  std::size_t min_n = 64;
  unsigned refine = 1;       // halves the spacing (doubles n) per unit
  double samples_per_sigma = 16.0;  // lattice points within one std, per side
};

namespace detail {

/// Lattice for one factor axis.  The spacing resolves the factor's intensity
/// std (>= 32 points within +-1 sigma at defaults); the extent covers both
/// oversample * the coverage scale (amplitude decay) and the dual-side
/// resolution floor 2*pi*samples*sigma needed to resolve position features
/// of the minimum-uncertainty size 1/(2*sigma).
inline AxisGrid factor_axis(double sigma, double cover_scale, const GridOptions& opt) {
  if (!(sigma > 0.0) || !(cover_scale > 0.0))
    throw NumericalError("parameter degeneracy: factor scale vanished");
  if (!(opt.oversample >= 4.0)) throw ConfigError("oversample must be >= 4");
  if (opt.refine < 1) throw ConfigError("refine must be >= 1");
  const double dq = sigma / opt.samples_per_sigma / static_cast<double>(opt.refine);
  const double cover = (opt.oversample / 4.0) *
                       std::max(2.0 * std::sqrt(2.0) * 4.0 * cover_scale,
                                kTwoPi * 2.0 * opt.samples_per_sigma * sigma);
  std::size_t n = next_pow2(cover / dq);
  if (n < std::max<std::size_t>(64, opt.min_n)) n = std::max<std::size_t>(64, opt.min_n);
  return AxisGrid(n, dq, 0.0);
}

}  // namespace detail

/// Production momentum grids for the factorized amplitude: first the
/// q1+q2 axis (pump-limited), then the q1-q2 axis (phase-matching limited).
inline std::pair<AxisGrid, AxisGrid> build_grids(const BiphotonModel& m,
                                                 const GridOptions& opt = {}) {
  const double sp = m.pump.momentum_sigma_invmm();
  AxisGrid plus = detail::factor_axis(sp, sp, opt);
  AxisGrid minus = detail::factor_axis(minus_sigma_estimate(m), minus_cover_scale(m), opt);
  return {plus, minus};
}

inline std::pair<AxisGrid, AxisGrid> build_grids(const BiphotonModel& m, double oversample) {
  GridOptions opt;
  opt.oversample = oversample;
  return build_grids(m, opt);
}

}  // namespace eprsim
