#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "eprsim/amplitude.hpp"
#include "eprsim/density.hpp"
#include "eprsim/grid.hpp"
#include "eprsim/pipeline.hpp"
#include "oracles.hpp"

using namespace eprsim;

namespace {

BiphotonModel paper_gaussian() {
  return BiphotonModel::degenerate(PumpBeam(390.0, 0.17), 2.0, GaussianAngular(0.012));
}

Factor1D gaussian_factor(const AxisGrid& g, double sigma_q) {
  // amplitude exp(-q^2/(4 sigma^2)): intensity std sigma_q
  Factor1D f;
  f.grid = g;
  f.rep = Representation::momentum;
  f.values.resize(g.n);
  for (std::size_t i = 0; i < g.n; ++i) {
    const double q = g.point(i);
    f.values[i] = std::exp(-q * q / (4.0 * sigma_q * sigma_q));
  }
  return f;
}

}  // namespace

TEST(AxisGrid, DualGridRelation) {
  const AxisGrid g(256, 0.125);
  const AxisGrid d = g.dual();
  EXPECT_NEAR(g.spacing * d.spacing * static_cast<double>(g.n), kTwoPi, 1e-14);
  EXPECT_EQ(d.n, g.n);
}

TEST(AxisGrid, ValidatesSizeAndSpacing) {
  EXPECT_THROW(AxisGrid(63, 1.0), ConfigError);
  EXPECT_THROW(AxisGrid(96, 1.0), ConfigError);
  EXPECT_THROW(AxisGrid(64, 0.0), ConfigError);
  EXPECT_NO_THROW(AxisGrid(64, 1.0));
}

TEST(AxisGrid, NearestIndexSnapsWithinHalfSpacing) {
  const AxisGrid g(64, 0.5, 1.0);
  for (double x : {-3.3, 0.12, 1.0, 4.76}) {
    const std::size_t i = g.nearest_index(x);
    EXPECT_LE(std::abs(g.point(i) - x), g.spacing / 2.0 + 1e-15);
  }
}

TEST(BuildGrids, CoversFactorScalesAndSampling) {
  const auto m = paper_gaussian();
  const auto [plus, minus] = build_grids(m, 4.0);
  const double sp = m.pump.momentum_sigma_invmm();
  EXPECT_GE(plus.extent() / 2.0, 4.0 * sp);
  EXPECT_GE(minus.extent() / 2.0, 4.0 * minus_cover_scale(m));
  EXPECT_LE(plus.spacing, sp / 16.0);
  EXPECT_LE(minus.spacing, minus_sigma_estimate(m) / 16.0);
  EXPECT_EQ(plus.n & (plus.n - 1), 0u);
  EXPECT_GE(plus.n, 64u);
}

TEST(BuildGrids, RejectsLowOversample) {
  EXPECT_THROW(build_grids(paper_gaussian(), 2.0), ConfigError);
}

TEST(BuildGrids, DoublingOversampleDoublesExtentKeepsVariances) {
  RunConfig cfg;
  const auto r1 = run_theory(cfg, std::nullopt);
  RunConfig cfg8 = cfg;
  cfg8.oversample = 8.0;
  const auto r8 = run_theory(cfg8, std::nullopt);
  const auto [p4, m4] = build_grids(cfg.make_model(), 4.0);
  const auto [p8, m8] = build_grids(cfg.make_model(), 8.0);
  EXPECT_NEAR(p8.extent() / p4.extent(), 2.0, 1e-12);
  EXPECT_NEAR(m8.extent() / m4.extent(), 2.0, 1e-12);
  const double v1 = r1.report.dx_inf_mm * r1.report.dx_inf_mm;
  const double v8 = r8.report.dx_inf_mm * r8.report.dx_inf_mm;
  EXPECT_NEAR(v8, v1, 1e-6 * v1);
  const double w1 = r1.report.dp_inf_invmm * r1.report.dp_inf_invmm;
  const double w8 = r8.report.dp_inf_invmm * r8.report.dp_inf_invmm;
  EXPECT_NEAR(w8, w1, 1e-6 * w1);
}

TEST(Transforms, GaussianMapsToConjugateGaussian) {
  // intensity std sigma_q in momentum must give 1/(2 sigma_q) in position
  const double sigma_q = 3.0;
  const AxisGrid g(4096, sigma_q / 24.0);
  Factor1D f = gaussian_factor(g, sigma_q);
  const Factor1D fx = detail::transform_factor(f, +1, Representation::position);
  const Density1D dx = density_of(fx);
  const double sigma_x = std::sqrt(dx.variance());
  EXPECT_NEAR(sigma_x, 1.0 / (2.0 * sigma_q), 1e-6 / (2.0 * sigma_q));
}

TEST(Transforms, RoundTripIsIdentity) {
  const auto m = paper_gaussian();
  const auto fa = sample_factorized(m);
  const auto back = to_momentum(to_position(fa));
  double max_err = 0.0;
  for (std::size_t i = 0; i < fa.plus.values.size(); ++i)
    max_err = std::max(max_err, std::abs(back.plus.values[i] - fa.plus.values[i]));
  for (std::size_t i = 0; i < fa.minus.values.size(); ++i)
    max_err = std::max(max_err, std::abs(back.minus.values[i] - fa.minus.values[i]));
  EXPECT_LT(max_err, 1e-10);
}

TEST(Transforms, ParsevalHoldsForFactorsAndJoint) {
  const auto m = paper_gaussian();
  const auto fa = sample_factorized(m);
  const auto fx = to_position(fa);
  EXPECT_NEAR(fx.plus.norm_integral(), fa.plus.norm_integral(),
              1e-8 * fa.plus.norm_integral());
  EXPECT_NEAR(fx.minus.norm_integral(), fa.minus.norm_integral(),
              1e-8 * fa.minus.norm_integral());

  const AxisGrid g1(128, 0.35), g2(128, 0.35);
  BiphotonModel mild =
      BiphotonModel::degenerate(PumpBeam(390.0, 0.17), 2.0, GaussianAngular(0.0006));
  const Joint2D j = sample_joint(mild, g1, g2);
  const Joint2D jx = to_position(j);
  EXPECT_NEAR(jx.norm_integral(), j.norm_integral(), 1e-8 * j.norm_integral());
}

TEST(Transforms, RejectsWrongRepresentation) {
  const auto fa = sample_factorized(paper_gaussian());
  EXPECT_THROW(to_momentum(fa), NumericalError);
  EXPECT_THROW(to_position(to_position(fa)), NumericalError);
}

// factorized and dense paths sampled on matched lattices must agree both in
// momentum (exactly coincident points) and after transforming to position
TEST(DualPath, FactorizedMatchesJoint2DPointwise) {
  BiphotonModel mild =
      BiphotonModel::degenerate(PumpBeam(390.0, 0.17), 2.0, GaussianAngular(0.0006));
  const std::size_t n = 256;
  const double h = 0.22;
  const AxisGrid gq(n, h);
  const Joint2D jq = sample_joint(mild, gq, gq);
  const FactorizedAmplitude fa = sample_factorized(mild, AxisGrid(n, h), AxisGrid(n, h));

  // momentum representation: q_plus/q_minus land on the factor lattices when
  // the index sums/differences stay in range
  double max_rel = 0.0;
  const double peak = std::abs(jq.at(n / 2, n / 2));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::ptrdiff_t ip = static_cast<std::ptrdiff_t>(i + j) - static_cast<std::ptrdiff_t>(n / 2);
      const std::ptrdiff_t im = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(j) +
                                static_cast<std::ptrdiff_t>(n / 2);
      if (ip < 0 || ip >= static_cast<std::ptrdiff_t>(n) || im < 0 ||
          im >= static_cast<std::ptrdiff_t>(n))
        continue;
      const auto prod = fa.plus.values[static_cast<std::size_t>(ip)] *
                        fa.minus.values[static_cast<std::size_t>(im)];
      const double denom = std::max(std::abs(jq.at(i, j)), 1e-9 * peak);
      max_rel = std::max(max_rel, std::abs(prod - jq.at(i, j)) / denom);
    }
  }
  EXPECT_LT(max_rel, 1e-9);

  // position representation: compare normalized densities where the photon
  // lattice maps onto the factor lattices (even index sums)
  const Joint2D jx = to_position(jq);
  const FactorizedAmplitude fx = to_position(fa);
  const Density2D dj = density_of(jx);
  const FactorizedDensity df = density_of(fx);
  double max_rel_x = 0.0;
  double peak_x = 0.0;
  for (double v : dj.values) peak_x = std::max(peak_x, v);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if ((i + j) % 2 != 0) continue;
      const std::ptrdiff_t ip = static_cast<std::ptrdiff_t>((i + j) / 2);
      const std::ptrdiff_t im = static_cast<std::ptrdiff_t>(n / 2) +
                                (static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(j)) / 2;
      if (ip < 0 || ip >= static_cast<std::ptrdiff_t>(n) || im < 0 ||
          im >= static_cast<std::ptrdiff_t>(n))
        continue;
      const double dens = dj.at(i, j);
      // stay above the 2-D FFT's absolute rounding floor
      if (dens < 1e-5 * peak_x) continue;
      const double fact = 0.5 * df.plus.values[static_cast<std::size_t>(ip)] *
                          df.minus.values[static_cast<std::size_t>(im)];
      max_rel_x = std::max(max_rel_x, std::abs(fact - dens) / dens);
    }
  }
  EXPECT_LT(max_rel_x, 1e-8);
}

TEST(DensityOf, UniformAmplitudeGivesUniformDensity) {
  Factor1D f;
  f.grid = AxisGrid(64, 0.5);
  f.values.assign(64, std::complex<double>(0.3, -0.4));
  const Density1D d = density_of(f);
  for (double v : d.values) EXPECT_NEAR(v, 1.0 / (64.0 * 0.5), 1e-14);
}

TEST(DensityOf, NormalizationAndPhaseInvariance) {
  const auto fa = sample_factorized(paper_gaussian());
  const auto fd = density_of(fa);
  EXPECT_NEAR(fd.plus.integral(), 1.0, 1e-9);
  EXPECT_NEAR(fd.minus.integral(), 1.0, 1e-9);

  FactorizedAmplitude rotated = fa;
  const std::complex<double> phase = std::polar(1.0, 1.234);
  for (auto& v : rotated.plus.values) v *= phase;
  const auto fd2 = density_of(rotated);
  for (std::size_t i = 0; i < fd.plus.values.size(); ++i)
    EXPECT_NEAR(fd2.plus.values[i], fd.plus.values[i], 1e-14 * (1.0 + fd.plus.values[i]));
}

TEST(DensityOf, AllZeroAmplitudeIsAnError) {
  Factor1D f;
  f.grid = AxisGrid(64, 0.5);
  f.values.assign(64, std::complex<double>(0.0, 0.0));
  EXPECT_THROW(density_of(f), NumericalError);
}

TEST(ConditionalSlice, SeparableDensitySliceIsTheMarginalFactor) {
  const AxisGrid g1(128, 0.1), g2(128, 0.1);
  const Density2D d = oracle::gaussian_density2(g1, g2, 0.0, 0.8, 0.0, 1.7);
  const auto c1 = conditional_slice(d, 2, 0.55);
  const auto c2 = conditional_slice(d, 2, -2.3);
  for (std::size_t i = 0; i < c1.density.values.size(); ++i)
    EXPECT_NEAR(c1.density.values[i], c2.density.values[i],
                1e-10 * (1.0 + c1.density.values[i]));
  EXPECT_NEAR(std::sqrt(c1.density.variance()), 0.8, 0.01);
}

TEST(ConditionalSlice, SnapsToNearestGridLine) {
  const AxisGrid g1(128, 0.1), g2(128, 0.1);
  const Density2D d = oracle::gaussian_density2(g1, g2, 0.0, 0.8, 0.0, 1.7);
  const auto c = conditional_slice(d, 2, 0.533);
  EXPECT_LE(std::abs(c.conditioning_value - 0.533), g2.spacing / 2.0 + 1e-15);
}

TEST(ConditionalSlice, UnderflowOnNearImpossibleValue) {
  const AxisGrid g1(128, 0.1), g2(128, 0.1);
  Density2D d = oracle::gaussian_density2(g1, g2, 0.0, 0.4, 0.0, 0.4);
  // conditioning far out in the tail where the slice mass underflows
  EXPECT_THROW(conditional_slice(d, 2, 6.3), NumericalError);
}

TEST(ConditionalSlice, PaperConditionalMomentumStdTracksPump) {
  const auto m = paper_gaussian();
  const auto fd = density_of(sample_factorized(m));
  const auto cond = conditional_slice(fd, 2, 0.0);
  const double sigma = std::sqrt(cond.density.variance());
  // pump-limited: sigma of P(q1|q2=0) approaches 1/(2w) from below
  EXPECT_NEAR(sigma, m.pump.momentum_sigma_invmm(), 0.03 * sigma);
}

TEST(LinearComboVariance, IsotropicGaussianDifference) {
  const AxisGrid g(256, 0.08);
  const Density2D d = oracle::gaussian_density2(g, g, 0.0, 1.0, 0.0, 1.0);
  EXPECT_NEAR(linear_combo_variance(d, 1.0, -1.0), 2.0, 2e-3);
  EXPECT_NEAR(linear_combo_variance(d, 1.0, 1.0), 2.0, 2e-3);
}

TEST(LinearComboVariance, SingleAxisReproducesMarginalVariance) {
  const AxisGrid g(256, 0.08);
  const Density2D d = oracle::gaussian_density2(g, g, 0.1, 0.7, -0.2, 1.1);
  EXPECT_NEAR(linear_combo_variance(d, 1.0, 0.0), 0.49, 5e-3);
  EXPECT_NEAR(linear_combo_variance(d, 0.0, 1.0), 1.21, 5e-3);
}

TEST(LinearComboVariance, PaperSumVarianceIsPumpLimited) {
  const auto m = paper_gaussian();
  const auto fd = density_of(sample_factorized(m));
  const double v = linear_combo_variance(fd, 1.0, 1.0);
  const double expected = m.pump.momentum_sigma_invmm() * m.pump.momentum_sigma_invmm();
  EXPECT_NEAR(v, expected, 0.03 * expected);
}

TEST(Invariants, DensityExchangeSymmetric) {
  BiphotonModel mild =
      BiphotonModel::degenerate(PumpBeam(390.0, 0.17), 2.0, GaussianAngular(0.0006));
  const AxisGrid g(128, 0.35);
  const Density2D d = density_of(sample_joint(mild, g, g));
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = i + 1; j < g.n; ++j)
      ASSERT_NEAR(d.at(i, j), d.at(j, i), 1e-12 * (1.0 + d.at(i, j)));
}

TEST(Invariants, MomentumConcentratesOnAntiDiagonal) {
  const auto m = paper_gaussian();
  const auto fq = density_of(sample_factorized(m));
  EXPECT_LE(linear_combo_variance(fq, 1.0, 1.0), linear_combo_variance(fq, 1.0, -1.0));
  const auto fx = density_of(to_position(sample_factorized(m)));
  EXPECT_LE(linear_combo_variance(fx, 1.0, -1.0), linear_combo_variance(fx, 1.0, 1.0));
}

TEST(Invariants, EprLimitMonotonicity) {
  // wider pump: tighter sum-momentum; wider emission: tighter relative position
  double prev = 1e300;
  for (double w : {0.05, 0.1, 0.17, 0.3, 0.6}) {
    const auto m = BiphotonModel::degenerate(PumpBeam(390.0, w), 2.0, GaussianAngular(0.012));
    const double v = linear_combo_variance(density_of(sample_factorized(m)), 1.0, 1.0);
    EXPECT_LT(v, prev);
    prev = v;
  }
  prev = 1e300;
  for (double dphi : {0.004, 0.008, 0.012, 0.02, 0.04}) {
    const auto m =
        BiphotonModel::degenerate(PumpBeam(390.0, 0.17), 2.0, GaussianAngular(dphi));
    const double v =
        linear_combo_variance(density_of(to_position(sample_factorized(m))), 1.0, -1.0);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(Crop, PreservesCoordinatesAndRenormalizes) {
  const AxisGrid g(256, 0.05);
  const Density1D d = oracle::gaussian_density(g, 0.3, 0.5);
  const Density1D c = crop(d, -1.0, 1.6);
  EXPECT_NEAR(c.integral(), 1.0, 1e-12);
  // zero padding may extend the axis, but no mass may sit outside the window
  for (std::size_t i = 0; i < c.grid.n; ++i)
    if (c.values[i] > 0.0) {
      EXPECT_GE(c.grid.point(i), -1.0 - 1e-12);
      EXPECT_LE(c.grid.point(i), 1.6 + 1e-12);
    }
  // a lattice point retained by the crop keeps its coordinate exactly
  const std::size_t i_src = g.nearest_index(0.3);
  const std::size_t i_out = c.grid.nearest_index(0.3);
  EXPECT_DOUBLE_EQ(g.point(i_src), c.grid.point(i_out));
  EXPECT_THROW(crop(d, 100.0, 101.0), NumericalError);
}

TEST(FactorizedDensity, MarginalCorePeaksAtCenterForSymmetricModel) {
  const auto m = paper_gaussian();
  const auto fq = density_of(sample_factorized(m));
  EXPECT_NEAR(peak_position(marginal_core(fq, 2)), 0.0, fq.plus.grid.spacing);
  const auto fx = density_of(to_position(sample_factorized(m)));
  EXPECT_NEAR(peak_position(marginal_core(fx, 2)), 0.0, fx.plus.grid.spacing);
}
