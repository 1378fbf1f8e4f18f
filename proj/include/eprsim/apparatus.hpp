#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eprsim/common.hpp"
#include "eprsim/density.hpp"
#include "eprsim/random.hpp"

namespace eprsim {

enum class ScanMode { position, momentum };

enum class FixedSlitPolicy { at_peak, explicit_position };

/// One slit-scan measurement: geometry, lattice, background and counting
/// statistics.  All positions are slit-plane millimetres in both modes.
struct ScanConfig {
  ScanMode mode = ScanMode::position;
  double slit_width_mm = 0.040;
  double focal_length_mm = 100.0;   // momentum mode only
  double wavenumber_invmm = 0.0;    // photon k at the lens, momentum mode only
  double scan_start_mm = -0.15;
  double scan_step_mm = 0.005;
  std::size_t scan_points = 61;
  FixedSlitPolicy fixed_slit_policy = FixedSlitPolicy::at_peak;
  double fixed_slit_position_mm = 0.0;  // used by the explicit policy
  double background_fraction = 0.01;
  double wing_width_factor = 10.0;
  std::uint64_t peak_counts = 10000;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(slit_width_mm > 0.0)) throw ConfigError("slit width must be positive");
    if (scan_points < 8) throw ConfigError("scan must have at least 8 points");
    if (!(scan_step_mm > 0.0)) throw ConfigError("scan step must be positive");
    if (!(background_fraction >= 0.0 && background_fraction < 1.0))
      throw ConfigError("background fraction must be in [0, 1)");
    if (!(wing_width_factor > 1.0)) throw ConfigError("wing width factor must exceed 1");
    if (peak_counts == 0) throw ConfigError("peak counts must be positive");
    if (mode == ScanMode::momentum) {
      if (!(focal_length_mm > 0.0)) throw ConfigError("focal length must be positive");
      if (!(wavenumber_invmm > 0.0)) throw ConfigError("wavenumber must be positive");
    }
  }

  double scan_position(std::size_t i) const {
    return scan_start_mm + static_cast<double>(i) * scan_step_mm;
  }
  double scan_end_mm() const { return scan_position(scan_points - 1); }

  /// rad/mm of transverse momentum per mm of slit-plane displacement.
  double mapping_scale() const {
    return mode == ScanMode::momentum ? wavenumber_invmm / focal_length_mm : 1.0;
  }
};

struct ScanResult {
  std::vector<double> positions_mm;
  std::vector<double> expected_rate;      // arbitrary rate units
  std::vector<std::uint64_t> counts;
  ScanMode mode = ScanMode::position;
  double mapping_scale = 1.0;
  double fixed_position_mm = 0.0;         // resolved fixed-slit center
  ScanConfig config;                      // configuration echo
  std::uint64_t seed = 0;

  bool operator==(const ScanResult& o) const {
    return positions_mm == o.positions_mm && expected_rate == o.expected_rate &&
           counts == o.counts && mode == o.mode && mapping_scale == o.mapping_scale &&
           fixed_position_mm == o.fixed_position_mm && seed == o.seed;
  }
};

/// Lens mapping of the far-field measurement: a photon of transverse
/// momentum q focuses at x = f*q/k in the focal plane.
inline double far_field_map(double x_mm, double f_mm, double k_invmm) {
  if (!(f_mm > 0.0)) throw ConfigError("focal length must be positive");
  if (!(k_invmm > 0.0)) throw ConfigError("wavenumber must be positive");
  return k_invmm * x_mm / f_mm;
}

inline double far_field_map_inverse(double q_invmm, double f_mm, double k_invmm) {
  if (!(f_mm > 0.0)) throw ConfigError("focal length must be positive");
  if (!(k_invmm > 0.0)) throw ConfigError("wavenumber must be positive");
  return f_mm * q_invmm / k_invmm;
}

namespace detail {

/// Window integral of the density over [lo1,hi1] x [lo2,hi2] by midpoint
/// subsampling with bilinear interpolation.
inline double window_integral(const Density2D& d, double lo1, double hi1, double lo2,
                              double hi2, std::size_t ns = 24) {
  const double h1 = (hi1 - lo1) / static_cast<double>(ns);
  const double h2 = (hi2 - lo2) / static_cast<double>(ns);
  double s = 0.0;
  for (std::size_t a = 0; a < ns; ++a) {
    const double x1 = lo1 + (static_cast<double>(a) + 0.5) * h1;
    for (std::size_t b = 0; b < ns; ++b) s += d.value_at(x1, lo2 + (static_cast<double>(b) + 0.5) * h2);
  }
  return s * h1 * h2;
}

}  // namespace detail

/// Expected coincidence rates for a slit scan over a scan-plane density.
/// The fixed slit is centered per policy; at-peak takes the argmax of the
/// fixed-axis marginal (ties toward the grid center).
inline ScanResult expected_scan(const Density2D& d, const ScanConfig& cfg) {
  cfg.validate();
  const double a = cfg.slit_width_mm;
  double fixed = cfg.fixed_slit_position_mm;
  if (cfg.fixed_slit_policy == FixedSlitPolicy::at_peak) {
    const Density1D marg = d.marginal(2);
    std::size_t best = 0;
    for (std::size_t i = 1; i < marg.values.size(); ++i) {
      const bool better = marg.values[i] > marg.values[best];
      const bool tie_toward_center =
          marg.values[i] == marg.values[best] &&
          std::abs(static_cast<double>(i) - static_cast<double>(marg.grid.n) / 2.0) <
              std::abs(static_cast<double>(best) - static_cast<double>(marg.grid.n) / 2.0);
      if (better || tie_toward_center) best = i;
    }
    fixed = marg.grid.point(best);
  }
  const double scan_lo = cfg.scan_start_mm - a / 2.0;
  const double scan_hi = cfg.scan_end_mm() + a / 2.0;
  if (scan_lo < d.grid1.min() || scan_hi > d.grid1.max() || fixed - a / 2.0 < d.grid2.min() ||
      fixed + a / 2.0 > d.grid2.max())
    throw ConfigError("scan range (plus one slit width) exceeds the density grid");

  ScanResult sr;
  sr.mode = cfg.mode;
  sr.mapping_scale = cfg.mapping_scale();
  sr.fixed_position_mm = fixed;
  sr.config = cfg;
  sr.seed = cfg.seed;
  sr.positions_mm.resize(cfg.scan_points);
  sr.expected_rate.resize(cfg.scan_points);
  for (std::size_t i = 0; i < cfg.scan_points; ++i) {
    const double x = cfg.scan_position(i);
    sr.positions_mm[i] = x;
    sr.expected_rate[i] =
        detail::window_integral(d, x - a / 2.0, x + a / 2.0, fixed - a / 2.0, fixed + a / 2.0);
  }
  return sr;
}

namespace detail {

struct CurveMoments {
  double mass = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  std::size_t peak_index = 0;
};

inline CurveMoments curve_moments(const std::vector<double>& x, const std::vector<double>& y) {
  CurveMoments cm;
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    m0 += y[i];
    m1 += x[i] * y[i];
    if (y[i] > y[cm.peak_index] ||
        (y[i] == y[cm.peak_index] &&
         std::abs(static_cast<double>(i) - static_cast<double>(x.size()) / 2.0) <
             std::abs(static_cast<double>(cm.peak_index) - static_cast<double>(x.size()) / 2.0)))
      cm.peak_index = i;
  }
  if (!(m0 > 0.0)) return cm;
  cm.mass = m0;
  cm.mean = m1 / m0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dxi = x[i] - cm.mean;
    m2 += dxi * dxi * y[i];
  }
  cm.variance = m2 / m0;
  return cm;
}

}  // namespace detail

/// Add broad background wings: a unit-peak Gaussian of width
/// wing_width_factor * (core curve std), centered on the core peak and
/// scaled to background_fraction of the core peak rate.
inline ScanResult add_wings(const ScanResult& sr, const ScanConfig& cfg) {
  if (sr.expected_rate.empty()) throw NumericalError("add_wings: expected rates missing");
  if (cfg.background_fraction == 0.0) return sr;
  const auto cm = detail::curve_moments(sr.positions_mm, sr.expected_rate);
  if (!(cm.mass > 0.0)) throw NumericalError("add_wings: curve carries no rate");
  const double core_std = std::sqrt(cm.variance);
  if (!(core_std > 0.0)) throw NumericalError("add_wings: degenerate core curve");
  const double wing_std = cfg.wing_width_factor * core_std;
  const double peak_pos = sr.positions_mm[cm.peak_index];
  const double peak_rate = sr.expected_rate[cm.peak_index];
  ScanResult out = sr;
  for (std::size_t i = 0; i < out.expected_rate.size(); ++i) {
    const double t = (sr.positions_mm[i] - peak_pos) / wing_std;
    out.expected_rate[i] += cfg.background_fraction * peak_rate * std::exp(-0.5 * t * t);
  }
  return out;
}

/// Poisson counts with mean peak_counts * rate/max(rate), drawn from a
/// deterministic per-call generator; identical (config, seed) give
/// identical counts.
inline ScanResult sample_counts(const ScanResult& sr, const ScanConfig& cfg) {
  if (sr.expected_rate.empty()) throw NumericalError("sample_counts: expected rates missing");
  ScanResult out = sr;
  out.counts.assign(sr.expected_rate.size(), 0);
  const double peak = *std::max_element(sr.expected_rate.begin(), sr.expected_rate.end());
  if (peak <= 0.0) return out;  // all-zero rates stay all-zero counts
  Rng rng(mix_seed(cfg.seed ^ (sr.mode == ScanMode::momentum ? 0x6d6f6d656e74756dULL
                                                             : 0x706f736974696f6eULL)));
  for (std::size_t i = 0; i < sr.expected_rate.size(); ++i)
    out.counts[i] = rng.poisson(static_cast<double>(cfg.peak_counts) * sr.expected_rate[i] / peak);
  out.seed = cfg.seed;
  return out;
}

namespace detail {

/// Constant + wide-Gaussian background fit on the outer region of the
/// curve (|x - peak| > 3 * core std estimated from the FWHM).  Returns the
/// fitted background evaluated at every scan point, or nullopt when too few
/// outer points exist to constrain the fit.
inline std::optional<std::vector<double>> fit_background(const std::vector<double>& x,
                                                         const std::vector<double>& y,
                                                         double wing_width_factor) {
  const auto cm = curve_moments(x, y);
  if (!(cm.mass > 0.0)) return std::nullopt;
  const double xpk = x[cm.peak_index];
  const double ypk = y[cm.peak_index];
  // FWHM-based core width estimate, robust against the wings themselves
  const double half = ypk / 2.0;
  std::size_t lo = cm.peak_index, hi = cm.peak_index;
  while (lo > 0 && y[lo] > half) --lo;
  while (hi + 1 < y.size() && y[hi] > half) ++hi;
  const double fwhm = x[hi] - x[lo];
  const double step = x.size() > 1 ? x[1] - x[0] : 1.0;
  const double s_est = std::max(fwhm / 2.355, step);
  const double sigma_b = wing_width_factor * s_est;

  double s11 = 0.0, s12 = 0.0, s22 = 0.0, b1 = 0.0, b2 = 0.0;
  std::size_t n_outer = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::abs(x[i] - xpk) <= 3.0 * s_est) continue;
    const double t = (x[i] - xpk) / sigma_b;
    const double g = std::exp(-0.5 * t * t);
    s11 += 1.0;
    s12 += g;
    s22 += g * g;
    b1 += y[i];
    b2 += g * y[i];
    ++n_outer;
  }
  if (n_outer < 4) return std::nullopt;
  const double det = s11 * s22 - s12 * s12;
  if (std::abs(det) < 1e-12 * s11 * s22) return std::nullopt;
  const double c0 = (b1 * s22 - b2 * s12) / det;
  const double c1 = (s11 * b2 - s12 * b1) / det;
  std::vector<double> bg(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = (x[i] - xpk) / sigma_b;
    bg[i] = c0 + c1 * std::exp(-0.5 * t * t);
  }
  return bg;
}

}  // namespace detail

/// Variance of the scan curve treated as a discrete density over scan
/// positions.  Optional baseline subtraction removes a fitted constant +
/// wide-Gaussian background (negatives clamped to zero).  Momentum mode
/// converts to (rad/mm)^2 through mapping_scale^2.
inline double scan_variance(const ScanResult& sr, bool use_counts, bool background_subtract) {
  const std::size_t n = sr.positions_mm.size();
  if (n == 0) throw NumericalError("scan_variance: empty scan");
  std::vector<double> y(n);
  if (use_counts) {
    if (sr.counts.size() != n) throw NumericalError("scan_variance: counts not sampled");
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<double>(sr.counts[i]);
  } else {
    if (sr.expected_rate.size() != n)
      throw NumericalError("scan_variance: expected rates missing");
    y = sr.expected_rate;
  }
  if (background_subtract) {
    const auto bg = detail::fit_background(sr.positions_mm, y, sr.config.wing_width_factor);
    if (bg) {
      for (std::size_t i = 0; i < n; ++i) y[i] = std::max(0.0, y[i] - (*bg)[i]);
    }
  }
  std::size_t nonzero = 0;
  for (double v : y)
    if (v > 0.0) ++nonzero;
  if (nonzero < 3) throw NumericalError("scan_variance: degenerate curve (fewer than 3 nonzero bins)");
  const auto cm = detail::curve_moments(sr.positions_mm, y);
  const double scale = sr.mapping_scale;
  return cm.variance * scale * scale;
}

/// Remove the scanning slit's rectangular second moment a^2/12 from a raw
/// scan variance.  The fixed slit conditions rather than convolves and is
/// deliberately not corrected.  Units of slit_width must match the variance.
inline double slit_correction(double raw_variance, double slit_width) {
  const double broadening = slit_width * slit_width / 12.0;
  if (!(raw_variance > broadening))
    throw NumericalError("slit correction exceeds the raw variance: slit wider than the feature");
  return raw_variance - broadening;
}

}  // namespace eprsim
