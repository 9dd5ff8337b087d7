#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace vanguard::detail {

// Iterative radix-2 Cooley-Tukey, in place. Size must be a power of two.
inline void fft_pow2(std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  if (n < 2) return;

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * 3.14159265358979323846 / static_cast<double>(len);
    std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = x[i + k];
        std::complex<double> v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

}  // namespace vanguard::detail
