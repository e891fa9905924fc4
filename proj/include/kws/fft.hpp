// kws/fft.hpp

// Copyright 2026 the qbe-kws authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <complex>
#include <vector>

namespace kws {

inline int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

// In-place iterative radix-2 Cooley-Tukey.  x.size() must be a power of two.
inline void fft_inplace(std::vector<std::complex<double>>& x) {
  const size_t n = x.size();
  if (n <= 1) return;

  // bit reversal permutation
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }

  const double kPi = 3.14159265358979323846;
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = x[i + k];
        const std::complex<double> v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// One-sided power spectrum |X_k|^2 for k = 0..nfft/2 of a real frame,
// zero-padded to nfft.  No 1/N scaling.
inline std::vector<double> power_spectrum(const std::vector<double>& frame,
                                          int nfft) {
  std::vector<std::complex<double>> x(static_cast<size_t>(nfft));
  for (size_t i = 0; i < frame.size() && i < x.size(); ++i) x[i] = frame[i];
  fft_inplace(x);
  std::vector<double> power(static_cast<size_t>(nfft / 2 + 1));
  for (size_t k = 0; k < power.size(); ++k) power[k] = std::norm(x[k]);
  return power;
}

}  // namespace kws
