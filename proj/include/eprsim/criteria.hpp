#pragma once

#include <cstdint>
#include <limits>
#include <cmath>
#include <string>

#include "eprsim/common.hpp"
#include "eprsim/density.hpp"
#include "eprsim/model.hpp"

namespace eprsim {

inline constexpr double kEprBound = 0.25;      // hbar^2/4
inline constexpr double kManciniBound = 1.0;   // hbar^2

struct Verdict {
  bool holds = false;        // criterion violated => entanglement/EPR demonstrated
  double margin = 0.0;       // bound / product
  double margin_log10 = 0.0;
};

struct TheoryPrediction {
  double dx_mm = 0.0;
  double dp_invmm = 0.0;
  double product_hbar2 = 0.0;
};

/// Variance of (x1 - x2) under P(x1|x2).  The shift by the conditioning
/// value cancels between the two moments, leaving the plain conditional
/// variance; the conditioning value must nevertheless be attached.
inline double inferred_position_variance(const ConditionalDensity& cond) {
  if (cond.fixed_axis != 1 && cond.fixed_axis != 2)
    throw NumericalError("conditional density carries no conditioning value");
  return cond.density.variance();
}

/// Variance of (p1 + p2) under P(p1|p2).
inline double inferred_momentum_variance(const ConditionalDensity& cond) {
  if (cond.fixed_axis != 1 && cond.fixed_axis != 2)
    throw NumericalError("conditional density carries no conditioning value");
  return cond.density.variance();
}

/// dx^2 * dp^2 in units of hbar^2 (p = hbar q with q in rad/mm).
inline double variance_product(double dx2_mm2, double dp2_invmm2) {
  if (dx2_mm2 < 0.0 || dp2_invmm2 < 0.0) throw NumericalError("negative variance");
  return dx2_mm2 * dp2_invmm2;
}

inline Verdict epr_verdict(double product_hbar2) {
  if (product_hbar2 < 0.0) throw NumericalError("negative variance product");
  Verdict v;
  v.holds = product_hbar2 < kEprBound;
  v.margin = product_hbar2 > 0.0 ? kEprBound / product_hbar2
                                 : std::numeric_limits<double>::infinity();
  v.margin_log10 = std::log10(v.margin);
  return v;
}

inline Verdict mancini_verdict(double dx12_sq_mm2, double dp12_sq_invmm2) {
  const double product = variance_product(dx12_sq_mm2, dp12_sq_invmm2);
  Verdict v;
  v.holds = product < kManciniBound;
  v.margin =
      product > 0.0 ? kManciniBound / product : std::numeric_limits<double>::infinity();
  v.margin_log10 = std::log10(v.margin);
  return v;
}

/// Closed-form predictions: the pump beam limits the total momentum to
/// hbar/(2w); the angular emission width limits the conditional transverse
/// size to kInferredWidthCoefficient/(k*dphi).
inline TheoryPrediction theory_predictions(const BiphotonModel& m) {
  TheoryPrediction t;
  t.dp_invmm = 1.0 / (2.0 * m.pump.width_w_mm);
  const double dphi = emission_angular_width(m);
  t.dx_mm = kInferredWidthCoefficient / (m.crystal.k_degenerate_invmm() * dphi);
  const double s = t.dx_mm * t.dp_invmm;
  t.product_hbar2 = s * s;
  return t;
}

enum class Provenance { theory_grid, simulated_scan, external_data };

inline std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::theory_grid: return "theory_grid";
    case Provenance::simulated_scan: return "simulated_scan";
    case Provenance::external_data: return "external_data";
  }
  return "unknown";
}

/// Full evaluation of the EPR and separability criteria for one pipeline.
struct CriteriaReport {
  double dx_inf_mm = 0.0;
  double dp_inf_invmm = 0.0;
  double product_hbar2 = 0.0;
  double dx12_mm = 0.0;
  double dp12_invmm = 0.0;
  double joint_product_hbar2 = 0.0;
  double epr_bound = kEprBound;
  double mancini_bound = kManciniBound;
  bool epr_violated = false;
  bool inseparable = false;
  double epr_margin = 0.0;
  double epr_margin_log10 = 0.0;
  double mancini_margin = 0.0;
  double mancini_margin_log10 = 0.0;
  double theory_dx_mm = 0.0;
  double theory_dp_invmm = 0.0;
  double theory_product_hbar2 = 0.0;
  double emission_angular_width_rad = 0.0;
  Provenance provenance = Provenance::theory_grid;
  std::uint64_t seed = 0;

  /// Construct from variances, enforcing the report identities.
  static CriteriaReport assemble(double dx_inf2_mm2, double dp_inf2_invmm2, double dx12_sq_mm2,
                                 double dp12_sq_invmm2, const TheoryPrediction& theory,
                                 double dphi_rad, Provenance prov, std::uint64_t seed) {
    CriteriaReport r;
    r.dx_inf_mm = std::sqrt(dx_inf2_mm2);
    r.dp_inf_invmm = std::sqrt(dp_inf2_invmm2);
    r.product_hbar2 = variance_product(dx_inf2_mm2, dp_inf2_invmm2);
    r.dx12_mm = std::sqrt(dx12_sq_mm2);
    r.dp12_invmm = std::sqrt(dp12_sq_invmm2);
    r.joint_product_hbar2 = variance_product(dx12_sq_mm2, dp12_sq_invmm2);
    const Verdict epr = epr_verdict(r.product_hbar2);
    r.epr_violated = epr.holds;
    r.epr_margin = epr.margin;
    r.epr_margin_log10 = epr.margin_log10;
    const Verdict mv = mancini_verdict(dx12_sq_mm2, dp12_sq_invmm2);
    r.inseparable = mv.holds;
    r.mancini_margin = mv.margin;
    r.mancini_margin_log10 = mv.margin_log10;
    r.theory_dx_mm = theory.dx_mm;
    r.theory_dp_invmm = theory.dp_invmm;
    r.theory_product_hbar2 = theory.product_hbar2;
    r.emission_angular_width_rad = dphi_rad;
    r.provenance = prov;
    r.seed = seed;
    r.check();
    return r;
  }

  /// Report identities that hold by construction.
  void check() const {
    const double p = dx_inf_mm * dp_inf_invmm;
    if (std::abs(product_hbar2 - p * p) > 1e-12 * std::max(1.0, product_hbar2))
      throw NumericalError("report identity violated: product != (dx_inf*dp_inf)^2");
    const double j = dx12_mm * dp12_invmm;
    if (std::abs(joint_product_hbar2 - j * j) > 1e-12 * std::max(1.0, joint_product_hbar2))
      throw NumericalError("report identity violated: joint product != (dx12*dp12)^2");
    if (epr_violated != (product_hbar2 < epr_bound))
      throw NumericalError("report identity violated: EPR verdict inconsistent");
    if (inseparable != (joint_product_hbar2 < mancini_bound))
      throw NumericalError("report identity violated: separability verdict inconsistent");
  }
};

}  // namespace eprsim
