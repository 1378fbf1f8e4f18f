#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <variant>

#include "eprsim/common.hpp"

namespace eprsim {

/// Coefficient relating the conditional transverse size of a photon to the
/// angular emission width: dx_inf = kInferredWidthCoefficient/(k*dphi), with
/// dphi the standard deviation of the singles angular intensity.  It is the
/// exact proportionality constant of the paraxial sinc phase-matching model
/// (see tests), reused to calibrate the Gaussian angular stand-in.
inline constexpr double kInferredWidthCoefficient = 1.88;

/// <u^2> of the profile sinc^2(u^2) over the real line.  Sets the scale of
/// the difference-coordinate spectrum of the sinc model; cross-checked by
/// quadrature in the test suite.
inline constexpr double kSincProfileSecondMoment = 0.748590;

/// cw Gaussian pump beam.  width_w_mm is the standard deviation of the
/// transverse *intensity* profile, so the momentum-space intensity has
/// standard deviation 1/(2*width_w_mm) (minimum-uncertainty beam).
struct PumpBeam {
  double wavelength_nm = 390.0;
  double width_w_mm = 0.17;

  PumpBeam(double wavelength_nm_, double width_w_mm_)
      : wavelength_nm(wavelength_nm_), width_w_mm(width_w_mm_) {
    if (!(wavelength_nm > 0.0)) throw ConfigError("pump wavelength must be positive");
    if (!(width_w_mm > 0.0)) throw ConfigError("pump width must be positive");
  }

  double momentum_sigma_invmm() const { return 1.0 / (2.0 * width_w_mm); }
};

/// Paraxial collinear degenerate phase matching: the longitudinal mismatch
/// grows quadratically with the transverse momentum difference.
struct ParaxialSinc {};

/// Direct Gaussian model of the angular emission, parameterized by the
/// standard deviation delta_phi_rad of the singles angular intensity it is
/// meant to stand in for.
struct GaussianAngular {
  double delta_phi_rad = 0.012;

  explicit GaussianAngular(double delta_phi) : delta_phi_rad(delta_phi) {
    if (!(delta_phi_rad > 0.0)) throw ConfigError("delta_phi must be positive");
  }
};

using PhaseMatchModel = std::variant<ParaxialSinc, GaussianAngular>;

struct Crystal {
  double length_L_mm = 2.0;
  double degenerate_wavelength_nm = 780.0;
  PhaseMatchModel phasematch = ParaxialSinc{};
  double walkoff_rho = 0.0;  // rad; optional linear mismatch term

  Crystal(double length_mm, double degenerate_nm, PhaseMatchModel pm, double rho = 0.0)
      : length_L_mm(length_mm),
        degenerate_wavelength_nm(degenerate_nm),
        phasematch(pm),
        walkoff_rho(rho) {
    if (!(length_L_mm > 0.0)) throw ConfigError("crystal length must be positive");
    if (!(degenerate_wavelength_nm > 0.0))
      throw ConfigError("degenerate wavelength must be positive");
  }

  /// Wavenumber of a degenerate downconverted photon, rad/mm.
  double k_degenerate_invmm() const { return wavenumber_invmm(degenerate_wavelength_nm); }
};

struct BiphotonModel {
  PumpBeam pump;
  Crystal crystal;
  double chi = 1.0;  // overall interaction constant; normalized away

  BiphotonModel(PumpBeam p, Crystal c, double chi_ = 1.0)
      : pump(p), crystal(c), chi(chi_) {
    if (!(chi > 0.0)) throw ConfigError("chi must be positive");
    const double expected = 2.0 * pump.wavelength_nm;
    if (std::abs(crystal.degenerate_wavelength_nm - expected) > 1e-9 * expected)
      throw ConfigError("degenerate wavelength must equal twice the pump wavelength");
  }

  /// Degenerate-operation convenience constructor.
  static BiphotonModel degenerate(PumpBeam p, double length_mm, PhaseMatchModel pm,
                                  double rho = 0.0, double chi = 1.0) {
    return BiphotonModel(p, Crystal(length_mm, 2.0 * p.wavelength_nm, pm, rho), chi);
  }

  bool is_gaussian_angular() const {
    return std::holds_alternative<GaussianAngular>(crystal.phasematch);
  }
};

/// Angular spectrum of the pump at the sum momentum q1+q2.  Unit peak,
/// zero phase; |E(q)|^2 has standard deviation 1/(2w).
inline std::complex<double> pump_spectrum(const BiphotonModel& m, double q_sum_invmm) {
  const double w = m.pump.width_w_mm;
  return {std::exp(-q_sum_invmm * q_sum_invmm * w * w), 0.0};
}

/// Longitudinal wavevector mismatch as a function of the transverse momentum
/// difference q1-q2 (paraxial collinear model plus optional walk-off term).
inline double dkz_of_difference(const BiphotonModel& m, double q_minus_invmm) {
  if (m.is_gaussian_angular())
    throw Error("delta_kz is undefined under the GaussianAngular phase-match model");
  const double kd = m.crystal.k_degenerate_invmm();
  return q_minus_invmm * q_minus_invmm / (4.0 * kd) +
         m.crystal.walkoff_rho * q_minus_invmm;
}

inline double delta_kz(const BiphotonModel& m, double q1_invmm, double q2_invmm) {
  return dkz_of_difference(m, q1_invmm - q2_invmm);
}

/// (exp(i*dkz*L)-1)/(i*dkz), evaluated by series near dkz = 0 so the
/// limiting value L is reached without division.  |factor| = L*|sinc(dkz*L/2)|.
inline std::complex<double> phase_matching_factor(double dkz, double L_mm) {
  if (!(L_mm > 0.0)) throw ConfigError("crystal length must be positive");
  const double u = dkz * L_mm;
  if (std::abs(u) < 1e-3) {
    // (e^{iu}-1)/(i dkz) = L (1 + iu/2 - u^2/6 - i u^3/24 + ...)
    return L_mm * std::complex<double>(1.0 - u * u / 6.0, u / 2.0 - u * u * u / 24.0);
  }
  const std::complex<double> num = std::polar(1.0, u) - 1.0;
  return num / std::complex<double>(0.0, dkz);
}

/// Difference-coordinate factor of the two-photon amplitude.
///
/// For GaussianAngular the width is calibrated so that the conditional
/// position spread of the resulting state equals
/// kInferredWidthCoefficient/(k_d*delta_phi), matching what the sinc model
/// produces for the same angular width.
inline std::complex<double> difference_factor(const BiphotonModel& m, double q_minus_invmm) {
  if (const auto* g = std::get_if<GaussianAngular>(&m.crystal.phasematch)) {
    const double sigma_g =
        m.crystal.k_degenerate_invmm() * g->delta_phi_rad / kInferredWidthCoefficient;
    const double r = q_minus_invmm / (2.0 * sigma_g);
    return {std::exp(-r * r), 0.0};
  }
  return phase_matching_factor(dkz_of_difference(m, q_minus_invmm), m.crystal.length_L_mm);
}

/// Two-photon momentum amplitude A(q1,q2) = chi * E_p(q1+q2) * F(q1-q2).
inline std::complex<double> biphoton_amplitude(const BiphotonModel& m, double q1_invmm,
                                               double q2_invmm) {
  return m.chi * pump_spectrum(m, q1_invmm + q2_invmm) *
         difference_factor(m, q1_invmm - q2_invmm);
}

/// Intensity standard deviation of the difference factor, used to size grids.
inline double minus_sigma_estimate(const BiphotonModel& m) {
  if (const auto* g = std::get_if<GaussianAngular>(&m.crystal.phasematch))
    return m.crystal.k_degenerate_invmm() * g->delta_phi_rad / kInferredWidthCoefficient;
  const double kd = m.crystal.k_degenerate_invmm();
  return std::sqrt(8.0 * kd * kSincProfileSecondMoment / m.crystal.length_L_mm);
}

/// k_d * (angular width) of the model, the coverage scale of the q1-q2 axis.
inline double minus_cover_scale(const BiphotonModel& m) {
  if (const auto* g = std::get_if<GaussianAngular>(&m.crystal.phasematch))
    return m.crystal.k_degenerate_invmm() * g->delta_phi_rad;
  return 0.5 * minus_sigma_estimate(m);
}

/// Variance of the singles momentum computed by marginalizing |A|^2 on an
/// explicit difference-axis lattice of 2*half_extent/n spacing.  Valid only
/// for the ParaxialSinc variant.  Throws if the singles distribution is not
/// negligible (< 1e-6 of peak) at the lattice edge.
inline double singles_momentum_variance(const BiphotonModel& m, double half_extent_invmm,
                                        std::size_t n) {
  if (m.is_gaussian_angular())
    throw Error("singles marginalization applies to the ParaxialSinc variant");
  if (n < 16) throw NumericalError("singles grid too small");
  const double dq = 2.0 * half_extent_invmm / static_cast<double>(n);
  // sample the outer 2% on each side, not single points, since the sinc
  // profile oscillates through zeros
  const std::size_t margin = std::max<std::size_t>(2, n / 50);
  double m0 = 0.0, m1 = 0.0, m2 = 0.0, peak = 0.0;
  double edge = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double q = (static_cast<double>(j) - static_cast<double>(n) / 2.0) * dq;
    const double intensity = std::norm(difference_factor(m, q));
    if (intensity > peak) peak = intensity;
    if (j < margin || j + margin >= n) edge = std::max(edge, intensity);
    m0 += intensity;
    m1 += q * intensity;
    m2 += q * q * intensity;
  }
  if (m0 <= 0.0) throw NumericalError("singles distribution vanished");
  if (edge > 1e-6 * peak)
    throw NumericalError("grid too narrow: singles intensity exceeds 1e-6 of peak at edge");
  const double mean = m1 / m0;
  const double var_minus = m2 / m0 - mean * mean;
  const double sp = m.pump.momentum_sigma_invmm();
  // q1 = (q_plus + q_minus)/2 with independent factors
  return 0.25 * (var_minus + sp * sp);
}

/// Standard deviation of the far-field singles angular intensity, rad.
/// GaussianAngular returns its stored width; ParaxialSinc marginalizes on an
/// internally grown lattice until the edge criterion is met.
inline double emission_angular_width(const BiphotonModel& m) {
  if (const auto* g = std::get_if<GaussianAngular>(&m.crystal.phasematch))
    return g->delta_phi_rad;
  const double sigma = minus_sigma_estimate(m);
  double half = 2.0 * std::sqrt(2.0) * 4.0 * minus_cover_scale(m);
  const double dq = sigma / 16.0;
  const double L = m.crystal.length_L_mm;
  for (int i = 0; i < 48; ++i) {
    // envelope bound |sinc(v)| <= 1/|v| avoids probing an oscillation node
    const double v = std::min(std::abs(dkz_of_difference(m, half)),
                              std::abs(dkz_of_difference(m, -half))) *
                     L / 2.0;
    const double env = v > 1.0 ? 1.0 / (v * v) : 1.0;
    if (env <= 1e-6) break;
    half *= 2.0;
  }
  half *= 2.0;
  const std::size_t n = next_pow2(2.0 * half / dq);
  const double var_q1 = singles_momentum_variance(m, half, n);
  return std::sqrt(var_q1) / m.crystal.k_degenerate_invmm();
}

}  // namespace eprsim
