#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "eprsim/common.hpp"

namespace eprsim::fft {

using cvec = std::vector<std::complex<double>>;

namespace detail {

/// In-place iterative radix-2 transform, kernel exp(sign*i*2*pi*jk/n),
/// no normalization. n must be a power of two.
inline void radix2(cvec& a, int sign) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw NumericalError("fft: length must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * kTwoPi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

}  // namespace detail

/// Unitary transform between conjugate centered grids.
///
/// Input samples v_j live at t_j = (j - n/2)*dt; the output samples live at
/// s_k = (k - n/2)*ds with ds = 2*pi/(n*dt).  Forward (sign = -1) computes
///   out_k = dt/sqrt(2*pi) * sum_j v_j exp(-i s_k t_j),
/// the discretization of (1/sqrt(2*pi)) int v(t) exp(-i s t) dt.  Backward
/// (sign = +1) uses the conjugate kernel and dt of the source grid, so
/// backward(forward(v)) == v up to rounding.  Centered indexing is folded
/// into the standard FFT through (-1)^j pre/post twiddles; this requires n
/// to be a multiple of four (grids here are powers of two >= 64).
inline cvec centered_transform(const cvec& v, double dt, int sign) {
  const std::size_t n = v.size();
  if (n % 4 != 0) throw NumericalError("fft: grid size must be a multiple of 4");
  cvec a(n);
  for (std::size_t j = 0; j < n; ++j) a[j] = (j & 1) ? -v[j] : v[j];
  detail::radix2(a, sign);
  const double scale = dt / std::sqrt(kTwoPi);
  for (std::size_t k = 0; k < n; ++k) a[k] *= (k & 1) ? -scale : scale;
  return a;
}

}  // namespace eprsim::fft
