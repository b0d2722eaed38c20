#pragma once

#include <complex>
#include <numbers>
#include <vector>

#include "fraclab/errors.hpp"

namespace fraclab {

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// In-place iterative radix-2 FFT. sign = -1 forward, +1 inverse
/// (inverse includes the 1/N factor).
inline void fft_inplace(std::vector<std::complex<double>>& a, int sign) {
  const std::size_t n = a.size();
  if (!is_power_of_two(static_cast<int>(n)))
    throw ContractError("fft: length must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (sign > 0)
    for (auto& x : a) x /= static_cast<double>(n);
}

/// FFT along each axis of a row-major array with the given shape
/// (last axis fastest). Unused axes must have extent 1.
inline void fftn_inplace(std::vector<std::complex<double>>& a,
                         const std::array<int, 3>& shape, int sign) {
  const int nx = shape[0], ny = shape[1], nz = shape[2];
  std::vector<std::complex<double>> line;
  // axis 2
  if (nz > 1) {
    line.resize(nz);
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) {
        const std::size_t base = (static_cast<std::size_t>(i) * ny + j) * nz;
        for (int k = 0; k < nz; ++k) line[k] = a[base + k];
        fft_inplace(line, sign);
        for (int k = 0; k < nz; ++k) a[base + k] = line[k];
      }
  }
  // axis 1
  if (ny > 1) {
    line.resize(ny);
    for (int i = 0; i < nx; ++i)
      for (int k = 0; k < nz; ++k) {
        for (int j = 0; j < ny; ++j)
          line[j] = a[(static_cast<std::size_t>(i) * ny + j) * nz + k];
        fft_inplace(line, sign);
        for (int j = 0; j < ny; ++j)
          a[(static_cast<std::size_t>(i) * ny + j) * nz + k] = line[j];
      }
  }
  // axis 0
  if (nx > 1) {
    line.resize(nx);
    for (int j = 0; j < ny; ++j)
      for (int k = 0; k < nz; ++k) {
        for (int i = 0; i < nx; ++i)
          line[i] = a[(static_cast<std::size_t>(i) * ny + j) * nz + k];
        fft_inplace(line, sign);
        for (int i = 0; i < nx; ++i)
          a[(static_cast<std::size_t>(i) * ny + j) * nz + k] = line[i];
      }
  }
}

/// Angular frequency of DFT bin m on an N-point grid with spacing h.
inline double fft_wavenumber(int m, int n_points, double h) {
  const int half = n_points / 2;
  const int signed_m = m <= half ? m : m - n_points;
  return 2.0 * std::numbers::pi * signed_m / (n_points * h);
}

}  // namespace fraclab
