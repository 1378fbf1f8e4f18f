#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "eprsim/amplitude.hpp"

namespace eprsim {

/// Normalized non-negative density on a 1-D lattice: sum(values)*spacing = 1.
struct Density1D {
  AxisGrid grid;
  std::vector<double> values;

  double integral() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * grid.spacing;
  }
  double mean() const {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += grid.point(i) * values[i];
    return s * grid.spacing;
  }
  double variance() const {
    const double mu = mean();
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double d = grid.point(i) - mu;
      s += d * d * values[i];
    }
    return s * grid.spacing;
  }

  /// Linear interpolation; zero outside the lattice.
  double value_at(double x) const {
    const double r = (x - grid.center) / grid.spacing + static_cast<double>(grid.n) / 2.0;
    if (r < 0.0 || r > static_cast<double>(grid.n - 1)) return 0.0;
    const std::size_t lo = std::min(static_cast<std::size_t>(r), grid.n - 2);
    const double t = r - static_cast<double>(lo);
    return values[lo] * (1.0 - t) + values[lo + 1] * t;
  }
};

/// Normalized density over two photon coordinates, row-major on grid1 x grid2.
struct Density2D {
  AxisGrid grid1, grid2;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * grid2.n + j]; }

  double integral() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * grid1.spacing * grid2.spacing;
  }

  /// Bilinear interpolation; zero outside the lattice.
  double value_at(double x1, double x2) const {
    const double r1 = (x1 - grid1.center) / grid1.spacing + static_cast<double>(grid1.n) / 2.0;
    const double r2 = (x2 - grid2.center) / grid2.spacing + static_cast<double>(grid2.n) / 2.0;
    if (r1 < 0.0 || r1 > static_cast<double>(grid1.n - 1) || r2 < 0.0 ||
        r2 > static_cast<double>(grid2.n - 1))
      return 0.0;
    const std::size_t i = std::min(static_cast<std::size_t>(r1), grid1.n - 2);
    const std::size_t j = std::min(static_cast<std::size_t>(r2), grid2.n - 2);
    const double t1 = r1 - static_cast<double>(i), t2 = r2 - static_cast<double>(j);
    return at(i, j) * (1 - t1) * (1 - t2) + at(i + 1, j) * t1 * (1 - t2) +
           at(i, j + 1) * (1 - t1) * t2 + at(i + 1, j + 1) * t1 * t2;
  }

  Density1D marginal(int axis) const {
    const AxisGrid& g = (axis == 1) ? grid1 : grid2;
    const AxisGrid& o = (axis == 1) ? grid2 : grid1;
    Density1D d;
    d.grid = g;
    d.values.assign(g.n, 0.0);
    for (std::size_t i = 0; i < grid1.n; ++i)
      for (std::size_t j = 0; j < grid2.n; ++j)
        d.values[axis == 1 ? i : j] += at(i, j);
    for (double& v : d.values) v *= o.spacing;
    return d;
  }
};

/// Separable two-photon density held as its sum/difference factor densities.
/// momentum:  P(q1,q2) propto plus(q1+q2) * minus(q1-q2)
/// position:  P(x1,x2) propto plus((x1+x2)/2) * minus((x1-x2)/2)
struct FactorizedDensity {
  Density1D plus;
  Density1D minus;
  Representation rep = Representation::momentum;
};

namespace detail {

inline std::vector<double> normalized_intensity(const std::vector<std::complex<double>>& amp,
                                                double cell) {
  std::vector<double> v(amp.size());
  double total = 0.0;
  for (std::size_t i = 0; i < amp.size(); ++i) {
    v[i] = std::norm(amp[i]);
    total += v[i];
  }
  total *= cell;
  if (!(total > 0.0)) throw NumericalError("density of an all-zero amplitude");
  for (double& x : v) x /= total;
  return v;
}

}  // namespace detail

/// |amplitude|^2, discretely normalized to unit integral.
inline Density1D density_of(const Factor1D& f) {
  return {f.grid, detail::normalized_intensity(f.values, f.grid.spacing)};
}

inline Density2D density_of(const Joint2D& j) {
  return {j.grid1, j.grid2,
          detail::normalized_intensity(j.values, j.grid1.spacing * j.grid2.spacing)};
}

inline FactorizedDensity density_of(const FactorizedAmplitude& fa) {
  return {density_of(fa.plus), density_of(fa.minus), fa.rep};
}

/// Restrict to [lo, hi] and renormalize.  The retained lattice points keep
/// their coordinates exactly; the axis is zero-padded out to a power of two.
inline Density1D crop(const Density1D& d, double lo, double hi) {
  std::size_t i0 = d.grid.n, i1 = 0;
  for (std::size_t i = 0; i < d.grid.n; ++i) {
    const double x = d.grid.point(i);
    if (x >= lo && x <= hi) {
      i0 = std::min(i0, i);
      i1 = std::max(i1, i);
    }
  }
  if (i0 >= d.grid.n || i1 < i0 + 2)
    throw NumericalError("crop window contains fewer than 3 lattice points");
  const std::size_t npts = i1 - i0 + 1;
  double total = 0.0;
  for (std::size_t i = i0; i <= i1; ++i) total += d.values[i];
  total *= d.grid.spacing;
  if (!(total > 0.0)) throw NumericalError("crop window carries no probability mass");
  const std::size_t n_out = std::max<std::size_t>(64, next_pow2(static_cast<double>(npts)));
  const std::size_t offset = (n_out - npts) / 2;
  // center chosen so point(offset) lands on the first retained coordinate
  const double center = d.grid.point(i0) -
                        (static_cast<double>(offset) - static_cast<double>(n_out) / 2.0) *
                            d.grid.spacing;
  Density1D out;
  out.grid = AxisGrid(n_out, d.grid.spacing, center);
  out.values.assign(n_out, 0.0);
  for (std::size_t i = 0; i < npts; ++i) out.values[offset + i] = d.values[i0 + i] / total;
  return out;
}

/// Conditional slice of a density, P(u1 | u2 = value) or P(u2 | u1 = value).
struct ConditionalDensity {
  Density1D density;
  double conditioning_value = 0.0;  // snapped to the nearest grid line
  int fixed_axis = 2;
};

/// Nearest-grid-line slice of a dense density, renormalized.
inline ConditionalDensity conditional_slice(const Density2D& d, int fixed_axis,
                                            double fixed_value) {
  if (fixed_axis != 1 && fixed_axis != 2) throw ConfigError("fixed_axis must be 1 or 2");
  const AxisGrid& fg = (fixed_axis == 1) ? d.grid1 : d.grid2;
  if (!fg.contains(fixed_value))
    throw ConfigError("conditioning value lies outside the grid extent");
  const std::size_t k = fg.nearest_index(fixed_value);
  ConditionalDensity c;
  c.fixed_axis = fixed_axis;
  c.conditioning_value = fg.point(k);
  const AxisGrid& sg = (fixed_axis == 1) ? d.grid2 : d.grid1;
  c.density.grid = sg;
  c.density.values.resize(sg.n);
  double total = 0.0;
  for (std::size_t i = 0; i < sg.n; ++i) {
    const double v = (fixed_axis == 1) ? d.at(k, i) : d.at(i, k);
    c.density.values[i] = v;
    total += v;
  }
  // mass of the slice relative to the full density
  const double slice_mass = total * sg.spacing * fg.spacing;
  if (slice_mass < 1e-12)
    throw NumericalError("conditional slice underflow: conditioning on a near-impossible value");
  for (double& v : c.density.values) v /= total * sg.spacing;
  return c;
}

/// Conditional slice through a factorized density.  The slice lattice rides
/// on the factor that resolves the conditional structure (the minus factor
/// in position representation, the plus factor in momentum representation);
/// the other, broader factor is linearly interpolated.
inline ConditionalDensity conditional_slice(const FactorizedDensity& fd, int fixed_axis,
                                            double fixed_value) {
  if (fixed_axis != 1 && fixed_axis != 2) throw ConfigError("fixed_axis must be 1 or 2");
  const double c = fixed_value;
  ConditionalDensity out;
  out.fixed_axis = fixed_axis;
  out.conditioning_value = c;
  double total = 0.0;
  if (fd.rep == Representation::position) {
    // scanned = c + 2*(+-x_minus); x_plus = (scanned + c)/2
    const double sgn = (fixed_axis == 2) ? 1.0 : -1.0;
    const AxisGrid& mg = fd.minus.grid;
    out.density.grid = AxisGrid(mg.n, 2.0 * mg.spacing, c + sgn * 2.0 * mg.center);
    out.density.values.resize(mg.n);
    for (std::size_t j = 0; j < mg.n; ++j) {
      const double u = out.density.grid.point(j);
      const double p = fd.minus.value_at(sgn * (u - c) / 2.0) * fd.plus.value_at((u + c) / 2.0);
      out.density.values[j] = p;
      total += p;
    }
  } else {
    // q_plus = scanned + c rides the plus lattice; q_minus = +-(scanned - c)
    const double sgn = (fixed_axis == 2) ? 1.0 : -1.0;
    const AxisGrid& pg = fd.plus.grid;
    out.density.grid = AxisGrid(pg.n, pg.spacing, pg.center - c);
    out.density.values.resize(pg.n);
    for (std::size_t j = 0; j < pg.n; ++j) {
      const double u = out.density.grid.point(j);
      const double p = fd.plus.values[j] * fd.minus.value_at(sgn * (u - c));
      out.density.values[j] = p;
      total += p;
    }
  }
  if (!(total > 0.0))
    throw NumericalError("conditional slice underflow: conditioning on a near-impossible value");
  for (double& v : out.density.values) v /= total * out.density.grid.spacing;
  return out;
}

/// Core of the single-photon marginal of a factorized density: the region
/// around the sum-coordinate support, which contains the marginal peak.
/// axis selects the kept coordinate.  Normalized over the probe window.
inline Density1D marginal_core(const FactorizedDensity& fd, int axis) {
  if (axis != 1 && axis != 2) throw ConfigError("axis must be 1 or 2");
  const bool position = (fd.rep == Representation::position);
  // position: P(x2) propto sum_j plus(x2 + v_j) minus(v_j)         (axis 2)
  //           P(x1) propto sum_j plus(x1 - v_j) minus(v_j)         (axis 1)
  // momentum: P(q2) propto sum_j plus(2 q2 + v_j) minus(v_j)       (axis 2)
  //           P(q1) propto sum_j plus(2 q1 - v_j) minus(v_j)       (axis 1)
  const double alpha = position ? 1.0 : 2.0;
  const double beta = (axis == 2) ? 1.0 : -1.0;
  const AxisGrid& pg = fd.plus.grid;
  const AxisGrid& mg = fd.minus.grid;
  double pmax = 0.0;
  for (double v : fd.plus.values) pmax = std::max(pmax, v);
  const double floor_p = 1e-15 * pmax;
  std::size_t p0 = pg.n, p1 = 0;
  for (std::size_t i = 0; i < pg.n; ++i) {
    if (fd.plus.values[i] > floor_p) {
      p0 = std::min(p0, i);
      p1 = std::max(p1, i);
    }
  }
  if (p0 > p1) throw NumericalError("marginal of an empty density");
  // widen by half the support on each side so mass spilling sideways
  // through the minus core is still covered
  const std::size_t pad = std::max<std::size_t>(32, (p1 - p0) / 2);
  p0 = (p0 > pad) ? p0 - pad : 0;
  p1 = std::min(pg.n - 1, p1 + pad);
  std::size_t n_probe = 64;
  while (n_probe < p1 - p0 + 1) n_probe *= 2;
  n_probe = std::min(n_probe, pg.n);
  const std::size_t start = (p0 + p1 + 1 >= n_probe)
                                ? std::min((p0 + p1 + 1 - n_probe) / 2, pg.n - n_probe)
                                : 0;
  const double probe_spacing = pg.spacing / alpha;
  // probe point i corresponds to plus lattice index start + i
  const double first = pg.point(start) / alpha;
  const AxisGrid probe(n_probe, probe_spacing,
                       first + (static_cast<double>(n_probe) / 2.0) * probe_spacing);
  Density1D out;
  out.grid = probe;
  out.values.assign(probe.n, 0.0);
  const double s_lo = pg.point(start), s_hi = pg.point(start + n_probe - 1);
  for (std::size_t i = 0; i < probe.n; ++i) {
    const double t = probe.point(i);
    const double va = (s_lo - alpha * t) / beta;
    const double vb = (s_hi - alpha * t) / beta;
    const double v_min = std::min(va, vb), v_max = std::max(va, vb);
    if (v_max < mg.min() || v_min > mg.max()) continue;
    const std::size_t j0 = mg.nearest_index(std::max(v_min, mg.min()));
    const std::size_t j1 = mg.nearest_index(std::min(v_max, mg.max()));
    double acc = 0.0;
    for (std::size_t j = j0; j <= j1; ++j)
      acc += fd.plus.value_at(alpha * t + beta * mg.point(j)) * fd.minus.values[j];
    out.values[i] = acc;
  }
  double total = 0.0;
  for (double v : out.values) total += v;
  total *= probe.spacing;
  if (!(total > 0.0)) throw NumericalError("marginal carries no probability mass");
  for (double& v : out.values) v /= total;
  return out;
}

/// Lattice point of the density's argmax, ties toward the grid center.
inline double peak_position(const Density1D& d) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < d.values.size(); ++i) {
    const bool better = d.values[i] > d.values[best];
    const bool tie = d.values[i] == d.values[best] &&
                     std::abs(static_cast<double>(i) - static_cast<double>(d.grid.n) / 2.0) <
                         std::abs(static_cast<double>(best) - static_cast<double>(d.grid.n) / 2.0);
    if (better || tie) best = i;
  }
  return d.grid.point(best);
}

/// Variance of a*u1 + b*u2 under a dense density.
inline double linear_combo_variance(const Density2D& d, double a, double b) {
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < d.grid1.n; ++i) {
    const double u1 = d.grid1.point(i);
    for (std::size_t j = 0; j < d.grid2.n; ++j) {
      const double t = a * u1 + b * d.grid2.point(j);
      const double p = d.at(i, j);
      m0 += p;
      m1 += t * p;
      m2 += t * t * p;
    }
  }
  if (!(m0 > 0.0)) throw NumericalError("variance of an empty density");
  const double mean = m1 / m0;
  return m2 / m0 - mean * mean;
}

/// Variance of a*u1 + b*u2 under a factorized density, via the independence
/// of the sum and difference coordinates.
inline double linear_combo_variance(const FactorizedDensity& fd, double a, double b) {
  const double vp = fd.plus.variance();
  const double vm = fd.minus.variance();
  const double cp = a + b, cm = a - b;
  if (fd.rep == Representation::position) {
    // u1 = u_plus + u_minus, u2 = u_plus - u_minus
    return cp * cp * vp + cm * cm * vm;
  }
  // u1 = (u_plus + u_minus)/2, u2 = (u_plus - u_minus)/2
  return 0.25 * (cp * cp * vp + cm * cm * vm);
}

}  // namespace eprsim
