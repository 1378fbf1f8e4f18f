#pragma once

#include <algorithm>
#include <complex>
#include <vector>

#include "eprsim/fft.hpp"
#include "eprsim/grid.hpp"
#include "eprsim/model.hpp"

namespace eprsim {

enum class Representation { momentum, position };

/// One-dimensional complex amplitude sampled on a centered axis.
struct Factor1D {
  AxisGrid grid;
  std::vector<std::complex<double>> values;
  Representation rep = Representation::momentum;

  double norm_integral() const {
    double s = 0.0;
    for (const auto& v : values) s += std::norm(v);
    return s * grid.spacing;
  }
};

/// Two-photon amplitude in sum/difference coordinates:
///   momentum:  A(q1,q2) = plus(q1+q2) * minus(q1-q2)
///   position:  psi(x1,x2) propto plus((x1+x2)/2) * minus((x1-x2)/2)
struct FactorizedAmplitude {
  Factor1D plus;
  Factor1D minus;
  Representation rep = Representation::momentum;
};

/// Dense amplitude over photon coordinates, row-major [i*n2 + j] with i on
/// grid1 and j on grid2.  Exists for walk-off studies and as the
/// cross-validation path for the factorized production route.
struct Joint2D {
  AxisGrid grid1, grid2;
  std::vector<std::complex<double>> values;
  Representation rep = Representation::momentum;

  std::complex<double>& at(std::size_t i, std::size_t j) { return values[i * grid2.n + j]; }
  const std::complex<double>& at(std::size_t i, std::size_t j) const {
    return values[i * grid2.n + j];
  }

  double norm_integral() const {
    double s = 0.0;
    for (const auto& v : values) s += std::norm(v);
    return s * grid1.spacing * grid2.spacing;
  }
};

/// Sample the factorized momentum amplitude on the given sum/difference axes.
inline FactorizedAmplitude sample_factorized(const BiphotonModel& m, const AxisGrid& plus_axis,
                                             const AxisGrid& minus_axis) {
  FactorizedAmplitude fa;
  fa.plus.grid = plus_axis;
  fa.plus.values.resize(plus_axis.n);
  for (std::size_t i = 0; i < plus_axis.n; ++i)
    fa.plus.values[i] = m.chi * pump_spectrum(m, plus_axis.point(i));
  fa.minus.grid = minus_axis;
  fa.minus.values.resize(minus_axis.n);
  for (std::size_t i = 0; i < minus_axis.n; ++i)
    fa.minus.values[i] = difference_factor(m, minus_axis.point(i));
  fa.rep = Representation::momentum;
  return fa;
}

inline FactorizedAmplitude sample_factorized(const BiphotonModel& m,
                                             const GridOptions& opt = {}) {
  auto [plus, minus] = build_grids(m, opt);
  return sample_factorized(m, plus, minus);
}

/// Sample A(q1,q2) densely on photon-coordinate axes.
inline Joint2D sample_joint(const BiphotonModel& m, const AxisGrid& g1, const AxisGrid& g2) {
  Joint2D j;
  j.grid1 = g1;
  j.grid2 = g2;
  j.values.resize(g1.n * g2.n);
  for (std::size_t i = 0; i < g1.n; ++i) {
    const double q1 = g1.point(i);
    for (std::size_t k = 0; k < g2.n; ++k)
      j.values[i * g2.n + k] = biphoton_amplitude(m, q1, g2.point(k));
  }
  j.rep = Representation::momentum;
  return j;
}

namespace detail {

inline void require_centered(const AxisGrid& g) {
  if (g.center != 0.0)
    throw NumericalError("representation transforms require zero-centered axes");
}

inline Factor1D transform_factor(const Factor1D& f, int sign, Representation target) {
  require_centered(f.grid);
  Factor1D out;
  out.grid = f.grid.dual();
  out.values = fft::centered_transform(f.values, f.grid.spacing, sign);
  out.rep = target;
  return out;
}

}  // namespace detail

/// Momentum -> position.  Factor axes map to their conjugates (q1+q2 to
/// (x1+x2)/2, q1-q2 to (x1-x2)/2) through the unitary centered transform
/// with kernel exp(+i q x).
inline FactorizedAmplitude to_position(const FactorizedAmplitude& fa) {
  if (fa.rep != Representation::momentum)
    throw NumericalError("to_position: amplitude already in position representation");
  FactorizedAmplitude out;
  out.plus = detail::transform_factor(fa.plus, +1, Representation::position);
  out.minus = detail::transform_factor(fa.minus, +1, Representation::position);
  out.rep = Representation::position;
  return out;
}

inline FactorizedAmplitude to_momentum(const FactorizedAmplitude& fa) {
  if (fa.rep != Representation::position)
    throw NumericalError("to_momentum: amplitude already in momentum representation");
  FactorizedAmplitude out;
  out.plus = detail::transform_factor(fa.plus, -1, Representation::momentum);
  out.minus = detail::transform_factor(fa.minus, -1, Representation::momentum);
  out.rep = Representation::momentum;
  return out;
}

namespace detail {

inline Joint2D transform_joint(const Joint2D& in, int sign, Representation target) {
  require_centered(in.grid1);
  require_centered(in.grid2);
  Joint2D out;
  out.grid1 = in.grid1.dual();
  out.grid2 = in.grid2.dual();
  out.rep = target;
  const std::size_t n1 = in.grid1.n, n2 = in.grid2.n;
  out.values.resize(n1 * n2);
  // rows (axis 2), then columns (axis 1)
  std::vector<std::complex<double>> buf;
  for (std::size_t i = 0; i < n1; ++i) {
    buf.assign(in.values.begin() + static_cast<std::ptrdiff_t>(i * n2),
               in.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * n2));
    auto row = fft::centered_transform(buf, in.grid2.spacing, sign);
    std::copy(row.begin(), row.end(), out.values.begin() + static_cast<std::ptrdiff_t>(i * n2));
  }
  std::vector<std::complex<double>> col(n1);
  for (std::size_t j = 0; j < n2; ++j) {
    for (std::size_t i = 0; i < n1; ++i) col[i] = out.values[i * n2 + j];
    auto tcol = fft::centered_transform(col, in.grid1.spacing, sign);
    for (std::size_t i = 0; i < n1; ++i) out.values[i * n2 + j] = tcol[i];
  }
  return out;
}

}  // namespace detail

inline Joint2D to_position(const Joint2D& j) {
  if (j.rep != Representation::momentum)
    throw NumericalError("to_position: amplitude already in position representation");
  return detail::transform_joint(j, +1, Representation::position);
}

inline Joint2D to_momentum(const Joint2D& j) {
  if (j.rep != Representation::position)
    throw NumericalError("to_momentum: amplitude already in momentum representation");
  return detail::transform_joint(j, -1, Representation::momentum);
}

}  // namespace eprsim
