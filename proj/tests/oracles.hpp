// Test-only oracles: quadrature, analytic transforms and a small SVD, all
// independent of the library's production code paths.
#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include "eprsim/density.hpp"

namespace oracle {

// trapezoid quadrature of f over [a, b] with n intervals
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        std::size_t n) {
  const double h = (b - a) / static_cast<double>(n);
  double s = 0.5 * (f(a) + f(b));
  for (std::size_t i = 1; i < n; ++i) s += f(a + static_cast<double>(i) * h);
  return s * h;
}

struct Moments {
  double mass, mean, variance;
};

inline Moments moments(const std::function<double(double)>& f, double a, double b,
                       std::size_t n) {
  const double m0 = integrate(f, a, b, n);
  const double m1 = integrate([&](double x) { return x * f(x); }, a, b, n);
  const double mu = m1 / m0;
  const double m2 =
      integrate([&](double x) { return (x - mu) * (x - mu) * f(x); }, a, b, n);
  return {m0, mu, m2 / m0};
}

// variance of the singles momentum distribution of the paraxial sinc model,
// by direct quadrature of the closed-form difference spectrum plus the pump
// term; independent of the library's marginalization path
inline double sinc_singles_variance(double L_mm, double k_invmm, double pump_sigma,
                                    double half_extent = 40000.0, std::size_t n = 4000000) {
  auto intensity = [&](double q) {
    const double dkz = q * q / (4.0 * k_invmm);
    const double u = dkz * L_mm / 2.0;
    const double s = u == 0.0 ? 1.0 : std::sin(u) / u;
    return L_mm * L_mm * s * s;
  };
  const auto m = moments(intensity, -half_extent, half_extent, n);
  return 0.25 * (m.variance + pump_sigma * pump_sigma);
}

// top two singular values of a complex matrix by power iteration with one
// deflation step
inline std::pair<double, double> top_two_singular_values(
    const std::vector<std::complex<double>>& a, std::size_t rows, std::size_t cols,
    int iters = 200) {
  using cd = std::complex<double>;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  auto matvec = [&](const std::vector<cd>& v) {
    std::vector<cd> out(rows, cd(0, 0));
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) out[i] += a[i * cols + j] * v[j];
    return out;
  };
  auto matvec_h = [&](const std::vector<cd>& v) {
    std::vector<cd> out(cols, cd(0, 0));
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) out[j] += std::conj(a[i * cols + j]) * v[i];
    return out;
  };
  auto norm = [](const std::vector<cd>& v) {
    double s = 0;
    for (const auto& x : v) s += std::norm(x);
    return std::sqrt(s);
  };
  auto dot = [](const std::vector<cd>& u, const std::vector<cd>& v) {
    cd s(0, 0);
    for (std::size_t i = 0; i < u.size(); ++i) s += std::conj(u[i]) * v[i];
    return s;
  };
  // power iteration on A^H A; the deflation vector is projected out every
  // step so the second run converges to the next singular direction
  auto power = [&](const std::vector<cd>* deflate_v) {
    std::vector<cd> v(cols);
    for (auto& x : v) x = cd(uni(rng), uni(rng));
    for (int it = 0; it < iters; ++it) {
      if (deflate_v) {
        const cd c = dot(*deflate_v, v);
        for (std::size_t j = 0; j < cols; ++j) v[j] -= c * (*deflate_v)[j];
      }
      auto w = matvec_h(matvec(v));
      const double nw = norm(w);
      if (nw == 0.0) {
        for (auto& x : v) x = cd(0, 0);
        return std::make_pair(0.0, v);
      }
      for (auto& x : w) x /= nw;
      v = std::move(w);
    }
    if (deflate_v) {
      // twice-is-enough re-orthogonalization: a single pass leaves O(1)
      // leakage when the iterate collapsed onto the deflated direction
      for (int pass = 0; pass < 2; ++pass) {
        const cd c = dot(*deflate_v, v);
        for (std::size_t j = 0; j < cols; ++j) v[j] -= c * (*deflate_v)[j];
        const double n2 = norm(v);
        if (n2 == 0.0) return std::make_pair(0.0, v);
        for (auto& x : v) x /= n2;
      }
    }
    return std::make_pair(norm(matvec(v)), v);
  };
  auto [s1, v1] = power(nullptr);
  auto [s2, v2] = power(&v1);
  (void)v2;
  return {s1, s2};
}

// Gaussian density on an explicit lattice, normalized
inline eprsim::Density1D gaussian_density(const eprsim::AxisGrid& g, double mean, double sigma) {
  eprsim::Density1D d;
  d.grid = g;
  d.values.resize(g.n);
  double total = 0.0;
  for (std::size_t i = 0; i < g.n; ++i) {
    const double t = (g.point(i) - mean) / sigma;
    d.values[i] = std::exp(-0.5 * t * t);
    total += d.values[i];
  }
  for (auto& v : d.values) v /= total * g.spacing;
  return d;
}

// separable 2-D Gaussian density, normalized
inline eprsim::Density2D gaussian_density2(const eprsim::AxisGrid& g1, const eprsim::AxisGrid& g2,
                                           double mu1, double s1, double mu2, double s2) {
  eprsim::Density2D d;
  d.grid1 = g1;
  d.grid2 = g2;
  d.values.resize(g1.n * g2.n);
  double total = 0.0;
  for (std::size_t i = 0; i < g1.n; ++i) {
    const double t1 = (g1.point(i) - mu1) / s1;
    for (std::size_t j = 0; j < g2.n; ++j) {
      const double t2 = (g2.point(j) - mu2) / s2;
      const double v = std::exp(-0.5 * (t1 * t1 + t2 * t2));
      d.values[i * g2.n + j] = v;
      total += v;
    }
  }
  for (auto& v : d.values) v /= total * g1.spacing * g2.spacing;
  return d;
}

}  // namespace oracle
