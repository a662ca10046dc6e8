// tests/test_stft.cpp

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

#include "derevb/errors.hpp"
#include "derevb/rng.hpp"
#include "derevb/stft.hpp"
#include "doctest.h"

namespace {

using namespace derevb;

Waveform random_wave(std::size_t len, uint64_t seed) {
  Rng rng(seed);
  Waveform w;
  w.samples.resize(len);
  for (auto& s : w.samples) s = rng.normal();
  return w;
}

double rel_l2(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    err += (a[i] - b[i]) * (a[i] - b[i]);
    ref += a[i] * a[i];
  }
  return std::sqrt(err / std::max(ref, 1e-300));
}

}  // namespace

TEST_CASE("config validation") {
  StftConfig bad;
  bad.hop_len = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = StftConfig{};
  bad.n_bins = 100;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = StftConfig{};
  bad.frame_len = 120;  // not a power of two
  bad.n_bins = 61;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  CHECK_NOTHROW(StftConfig{}.validate());
}

TEST_CASE("periodic window closed forms") {
  const int n = 512;
  const auto ham = window_coeffs(Window::kHamming, n);
  const auto han = window_coeffs(Window::kHann, n);
  REQUIRE(ham.size() == static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double c = std::cos(2.0 * std::numbers::pi * i / n);
    CHECK(ham[i] == doctest::Approx(0.54 - 0.46 * c).epsilon(1e-12));
    CHECK(han[i] == doctest::Approx(0.5 - 0.5 * c).epsilon(1e-12));
  }
  // Periodic variant: w[0] != w[n-1]; the implied w[n] would close the loop.
  CHECK(ham[0] == doctest::Approx(0.08));
  CHECK(han[0] == doctest::Approx(0.0));
  CHECK(han[n / 2] == doctest::Approx(1.0));
}

TEST_CASE("frame count and shapes") {
  StftConfig cfg;
  CHECK(stft_frame_count(1, cfg) == 1);
  CHECK(stft_frame_count(512, cfg) == 1);
  CHECK(stft_frame_count(513, cfg) == 2);
  CHECK(stft_frame_count(512 + 256, cfg) == 2);
  CHECK(stft_frame_count(512 + 257, cfg) == 3);

  const auto w = random_wave(4000, 9);
  const auto spec = stft(w, cfg);
  CHECK(spec.n_frames == stft_frame_count(4000, cfg));
  CHECK(spec.source_len == 4000);
  CHECK(spec.values.size() == spec.n_frames * cfg.n_bins);
}

TEST_CASE("constant input concentrates on the window's own bins") {
  // A periodic Hamming frame of a constant signal is exactly
  // 0.54 - 0.23 e^{i 2 pi n/N} - 0.23 e^{-i 2 pi n/N}: the transform puts
  // 0.54 N in bin 0, -0.23 N in bin 1, and nothing anywhere else.
  StftConfig cfg;
  Waveform w;
  w.samples.assign(512 * 3, 1.0);
  const auto spec = stft(w, cfg);
  const std::size_t l = 1;  // fully covered interior frame
  CHECK(spec.at(l, 0).real() == doctest::Approx(0.54 * 512).epsilon(1e-10));
  CHECK(std::abs(spec.at(l, 0).imag()) < 1e-8);
  CHECK(spec.at(l, 1).real() == doctest::Approx(-0.23 * 512).epsilon(1e-10));
  for (int k = 2; k < cfg.n_bins; ++k)
    CHECK(std::abs(spec.at(l, k)) < 1e-8);
}

TEST_CASE("bin-aligned sine lands on adjacent bins only") {
  StftConfig cfg;
  const int k0 = 32;
  Waveform w;
  w.samples.resize(512 * 4);
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    w.samples[i] =
        std::sin(2.0 * std::numbers::pi * k0 * static_cast<double>(i) / 512.0);
  const auto spec = stft(w, cfg);
  // Hamming leakage spans k0-1..k0+1; everything else is numerically zero.
  for (int k = 0; k < cfg.n_bins; ++k) {
    const double mag = std::abs(spec.at(1, k));
    if (k < k0 - 1 || k > k0 + 1)
      CHECK(mag < 1e-8);
    else
      CHECK(mag > 1.0);
  }
}

TEST_CASE("perfect reconstruction on random lengths") {
  // 100 random signals spanning 0.5 s to 3 s.
  Rng rng(777);
  StftConfig cfg;
  for (int i = 0; i < 100; ++i) {
    const std::size_t len = static_cast<std::size_t>(
        rng.uniform_int(kReferenceSampleRate / 2, 3 * kReferenceSampleRate));
    const auto w = random_wave(len, 1000 + static_cast<uint64_t>(i));
    const auto back = istft(stft(w, cfg));
    REQUIRE(back.samples.size() == w.samples.size());
    CHECK(rel_l2(back.samples, w.samples) < 1e-6);
  }
}

TEST_CASE("perfect reconstruction with the Hann window") {
  StftConfig cfg;
  cfg.window = Window::kHann;
  const auto w = random_wave(10000, 12);
  const auto back = istft(stft(w, cfg));
  CHECK(rel_l2(back.samples, w.samples) < 1e-6);
}

TEST_CASE("reconstruction of a one-frame signal") {
  StftConfig cfg;
  const auto w = random_wave(300, 5);  // shorter than one frame
  const auto back = istft(stft(w, cfg));
  REQUIRE(back.samples.size() == w.samples.size());
  CHECK(rel_l2(back.samples, w.samples) < 1e-6);
}

TEST_CASE("frame subsets reconstruct their exact sample window") {
  // WOLA with the subset's own normalizer returns the original samples
  // wherever the kept frames have window coverage; training crops rely on
  // this to build sample-exact targets.
  StftConfig cfg;
  const std::size_t len = 6000;
  const auto w = random_wave(len, 21);
  const auto spec = stft(w, cfg);
  REQUIRE(spec.n_frames >= 8);

  const std::size_t t0 = 3, m = 4;
  const std::size_t hop = static_cast<std::size_t>(cfg.hop_len);
  const std::size_t span =
      static_cast<std::size_t>(cfg.frame_len) + (m - 1) * hop;
  const std::size_t out_len = std::min(span, len - t0 * hop);

  std::vector<double> ri(m * cfg.n_bins * 2);
  for (std::size_t l = 0; l < m; ++l)
    for (int k = 0; k < cfg.n_bins; ++k) {
      ri[(l * cfg.n_bins + k) * 2 + 0] = spec.at(t0 + l, k).real();
      ri[(l * cfg.n_bins + k) * 2 + 1] = spec.at(t0 + l, k).imag();
    }
  const auto seg = istft_core(ri.data(), m, cfg, out_len);
  REQUIRE(seg.size() == out_len);
  std::vector<double> want(w.samples.begin() + t0 * hop,
                           w.samples.begin() + t0 * hop + out_len);
  CHECK(rel_l2(seg, want) < 1e-9);
}

TEST_CASE("istft_core matches istft on full spectrograms") {
  StftConfig cfg;
  const auto w = random_wave(5000, 31);
  const auto spec = stft(w, cfg);
  std::vector<double> ri(spec.n_frames * cfg.n_bins * 2);
  for (std::size_t l = 0; l < spec.n_frames; ++l)
    for (int k = 0; k < cfg.n_bins; ++k) {
      ri[(l * cfg.n_bins + k) * 2 + 0] = spec.at(l, k).real();
      ri[(l * cfg.n_bins + k) * 2 + 1] = spec.at(l, k).imag();
    }
  const auto a = istft(spec);
  const auto b = istft_core(ri.data(), spec.n_frames, cfg, w.samples.size());
  CHECK(rel_l2(a.samples, b) < 1e-12);
}

TEST_CASE("decompose and recombine round-trip above the floor") {
  StftConfig cfg;
  const auto w = random_wave(4000, 44);
  const auto spec = stft(w, cfg);
  const auto mp = decompose(spec);
  CHECK(mp.n_frames == spec.n_frames);
  CHECK(mp.source_len == spec.source_len);
  const auto back = recombine(mp, mp);
  double worst = 0.0;
  for (std::size_t i = 0; i < spec.values.size(); ++i)
    worst = std::max(worst, std::abs(back.values[i] - spec.values[i]));
  CHECK(worst < 1e-6);  // random frames sit far above kMagFloorEps
}

TEST_CASE("magnitude floor keeps the log finite on silence") {
  StftConfig cfg;
  Waveform w;
  w.samples.assign(2048, 0.0);
  const auto mp = decompose(stft(w, cfg));
  for (const double v : mp.log_mag) {
    CHECK(std::isfinite(v));
    CHECK(v == doctest::Approx(std::log(kMagFloorEps)));
  }
}

TEST_CASE("phase stays in (-pi, pi]") {
  StftConfig cfg;
  const auto mp = decompose(stft(random_wave(8000, 55), cfg));
  for (const double p : mp.phase) {
    CHECK(p <= std::numbers::pi + 1e-12);
    CHECK(p > -std::numbers::pi - 1e-12);
  }
}

TEST_CASE("mag_phase_to_ri agrees with the complex planes") {
  StftConfig cfg;
  const auto spec = stft(random_wave(3000, 66), cfg);
  const auto mp = decompose(spec);
  const auto ri = mag_phase_to_ri(mp);
  REQUIRE(ri.size() == spec.values.size() * 2);
  double worst = 0.0;
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    worst = std::max(worst, std::abs(ri[2 * i] - spec.values[i].real()));
    worst = std::max(worst, std::abs(ri[2 * i + 1] - spec.values[i].imag()));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("recombine mixes magnitude and phase donors") {
  StftConfig cfg;
  const auto a = decompose(stft(random_wave(3000, 71), cfg));
  const auto b = decompose(stft(random_wave(3000, 72), cfg));
  const auto mix = recombine(a, b);
  for (std::size_t i = 0; i < mix.values.size(); ++i) {
    CHECK(std::abs(mix.values[i]) ==
          doctest::Approx(std::exp(a.log_mag[i])).epsilon(1e-9));
    if (std::abs(mix.values[i]) > 1e-12)
      CHECK(std::arg(mix.values[i]) == doctest::Approx(b.phase[i]).epsilon(1e-9));
  }
}

TEST_CASE("recombine rejects mismatched shapes") {
  StftConfig cfg;
  const auto a = decompose(stft(random_wave(3000, 81), cfg));
  const auto b = decompose(stft(random_wave(5000, 82), cfg));
  CHECK_THROWS_AS(recombine(a, b), ShapeError);
}
