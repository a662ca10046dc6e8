// tests/test_fft.cpp

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

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "derevb/fft.hpp"
#include "derevb/rng.hpp"
#include "doctest.h"

namespace {

using derevb::Rng;
using std::complex;

// Direct O(n^2) DFT used as the independent reference.
std::vector<complex<double>> naive_dft(const std::vector<complex<double>>& x) {
  const std::size_t n = x.size();
  std::vector<complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) *
                         static_cast<double>(t) / static_cast<double>(n);
      acc += x[t] * complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

double max_abs_diff(const std::vector<complex<double>>& a,
                    const std::vector<complex<double>>& b) {
  REQUIRE(a.size() == b.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace

TEST_CASE("pow2 helpers") {
  CHECK(derevb::fft::is_pow2(1));
  CHECK(derevb::fft::is_pow2(512));
  CHECK_FALSE(derevb::fft::is_pow2(0));
  CHECK_FALSE(derevb::fft::is_pow2(100));
  CHECK(derevb::fft::next_pow2(1) == 1);
  CHECK(derevb::fft::next_pow2(2) == 2);
  CHECK(derevb::fft::next_pow2(3) == 4);
  CHECK(derevb::fft::next_pow2(512) == 512);
  CHECK(derevb::fft::next_pow2(513) == 1024);
}

TEST_CASE("transform matches the direct DFT on random inputs") {
  Rng rng(101);
  for (std::size_t n : {std::size_t(1), std::size_t(2), std::size_t(8),
                        std::size_t(64), std::size_t(512)}) {
    std::vector<complex<double>> x(n);
    for (auto& v : x) v = {rng.normal(), rng.normal()};
    auto got = x;
    derevb::fft::transform(got, false);
    const auto want = naive_dft(x);
    CHECK(max_abs_diff(got, want) < 1e-9 * static_cast<double>(n + 1));
  }
}

TEST_CASE("inverse transform undoes the forward one") {
  Rng rng(202);
  std::vector<complex<double>> x(256);
  for (auto& v : x) v = {rng.normal(), rng.normal()};
  auto y = x;
  derevb::fft::transform(y, false);
  derevb::fft::transform(y, true);
  CHECK(max_abs_diff(y, x) < 1e-10);
}

TEST_CASE("rfft equals the direct DFT of the zero-padded real input") {
  Rng rng(303);
  const std::size_t len = 300, n = 512;
  std::vector<double> x(len);
  for (auto& v : x) v = rng.normal();

  std::vector<complex<double>> padded(n, 0.0);
  for (std::size_t i = 0; i < len; ++i) padded[i] = x[i];
  const auto full = naive_dft(padded);

  const auto bins = derevb::fft::rfft(x.data(), len, n);
  REQUIRE(bins.size() == n / 2 + 1);
  for (std::size_t k = 0; k < bins.size(); ++k)
    CHECK(std::abs(bins[k] - full[k]) < 1e-9);
}

TEST_CASE("rfft truncates inputs longer than the transform size") {
  Rng rng(304);
  std::vector<double> x(40);
  for (auto& v : x) v = rng.normal();
  const auto got = derevb::fft::rfft(x.data(), x.size(), 32);
  const auto want = derevb::fft::rfft(x.data(), 32, 32);
  REQUIRE(got.size() == want.size());
  for (std::size_t k = 0; k < got.size(); ++k)
    CHECK(std::abs(got[k] - want[k]) < 1e-12);
}

TEST_CASE("irfft round-trips rfft") {
  Rng rng(404);
  const std::size_t n = 512;
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();
  const auto bins = derevb::fft::rfft(x.data(), n, n);
  const auto back = derevb::fft::irfft(bins.data(), n);
  REQUIRE(back.size() == n);
  for (std::size_t i = 0; i < n; ++i)
    CHECK(std::abs(back[i] - x[i]) < 1e-10);
}

TEST_CASE("irfft ignores imaginary leakage on DC and Nyquist") {
  Rng rng(505);
  const std::size_t n = 64;
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();
  auto bins = derevb::fft::rfft(x.data(), n, n);
  auto dirty = bins;
  dirty.front() += complex<double>(0.0, 0.3);
  dirty.back() += complex<double>(0.0, -0.7);
  const auto clean = derevb::fft::irfft(bins.data(), n);
  const auto got = derevb::fft::irfft(dirty.data(), n);
  for (std::size_t i = 0; i < n; ++i)
    CHECK(std::abs(got[i] - clean[i]) < 1e-10);
}

TEST_CASE("parseval energy identity") {
  Rng rng(606);
  const std::size_t n = 128;
  std::vector<complex<double>> x(n);
  for (auto& v : x) v = {rng.normal(), rng.normal()};
  auto y = x;
  derevb::fft::transform(y, false);
  double et = 0.0, ef = 0.0;
  for (const auto& v : x) et += std::norm(v);
  for (const auto& v : y) ef += std::norm(v);
  CHECK(std::abs(ef / static_cast<double>(n) - et) < 1e-9 * et);
}
