// derevb/fft.cpp

// Copyright 2026  The derevb authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "derevb/fft.hpp"

#include <cmath>

#include "derevb/errors.hpp"

namespace derevb::fft {

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void transform(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (!is_pow2(n)) throw InvalidInput("fft: size must be a power of two");
  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= scale;
  }
}

std::vector<std::complex<double>> rfft(const double* x, std::size_t len,
                                       std::size_t n) {
  std::vector<std::complex<double>> buf(n, {0.0, 0.0});
  const std::size_t m = len < n ? len : n;
  for (std::size_t i = 0; i < m; ++i) buf[i] = {x[i], 0.0};
  transform(buf, false);
  buf.resize(n / 2 + 1);
  return buf;
}

std::vector<double> irfft(const std::complex<double>* bins, std::size_t n) {
  if (!is_pow2(n)) throw InvalidInput("irfft: size must be a power of two");
  const std::size_t k_bins = n / 2 + 1;
  std::vector<std::complex<double>> buf(n);
  buf[0] = bins[0];
  for (std::size_t k = 1; k < k_bins; ++k) {
    buf[k] = bins[k];
    if (k != n / 2) buf[n - k] = std::conj(bins[k]);
  }
  transform(buf, true);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = buf[i].real();
  return out;
}

}  // namespace derevb::fft
