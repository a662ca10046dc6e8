// tests/test_signal_model.cpp

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
#include <vector>

#include "derevb/errors.hpp"
#include "derevb/rng.hpp"
#include "derevb/signal_model.hpp"
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

// Direct O(n*m) convolution truncated to len(s); the oracle for the FFT path.
std::vector<double> naive_convolve(const std::vector<double>& s,
                                   const std::vector<double>& h) {
  std::vector<double> out(s.size(), 0.0);
  for (std::size_t n = 0; n < s.size(); ++n)
    for (std::size_t k = 0; k <= n && k < h.size(); ++k)
      out[n] += h[k] * s[n - k];
  return out;
}

}  // namespace

TEST_CASE("mixture spec validation") {
  MixtureSpec ok;
  CHECK_NOTHROW(ok.validate());
  ok.rt60_s = 0.0;  // anechoic sentinel
  CHECK_NOTHROW(ok.validate());
  ok.snr_db = kSnrInf;  // noise-free sentinel
  CHECK_NOTHROW(ok.validate());

  MixtureSpec bad;
  bad.rt60_s = -0.2;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = MixtureSpec{};
  bad.rt60_s = 3.0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = MixtureSpec{};
  bad.snr_db = std::nan("");
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = MixtureSpec{};
  bad.noise_kind = NoiseKind::kRecorded;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("rir has a unit direct tap and a decaying tail") {
  const auto rir = synth_rir(0.5, 1.0, kReferenceSampleRate, 3);
  REQUIRE(rir.taps.size() == static_cast<std::size_t>(kReferenceSampleRate));
  CHECK(rir.taps[0] == doctest::Approx(1.0));
  // Tail energy decays: first 50 ms of tail carries more than the last 50 ms.
  const std::size_t w = kReferenceSampleRate / 20;
  double head = 0.0, tail = 0.0;
  for (std::size_t i = 1; i <= w; ++i) head += rir.taps[i] * rir.taps[i];
  for (std::size_t i = rir.taps.size() - w; i < rir.taps.size(); ++i)
    tail += rir.taps[i] * rir.taps[i];
  CHECK(head > 100.0 * tail);
}

TEST_CASE("rir generation is deterministic in the seed") {
  const auto a = synth_rir(0.4, 0.8, kReferenceSampleRate, 9);
  const auto b = synth_rir(0.4, 0.8, kReferenceSampleRate, 9);
  const auto c = synth_rir(0.4, 0.8, kReferenceSampleRate, 10);
  CHECK(a.taps == b.taps);
  CHECK(a.taps != c.taps);
}

TEST_CASE("rir rejects bad parameters") {
  CHECK_THROWS_AS(synth_rir(0.0, 1.0, kReferenceSampleRate, 1), InvalidInput);
  CHECK_THROWS_AS(synth_rir(0.5, 0.2, kReferenceSampleRate, 1), InvalidInput);
}

TEST_CASE("schroeder estimate recovers nominal rt60 within 15 percent") {
  for (const double rt : {0.2, 0.5, 0.8}) {
    for (uint64_t seed = 0; seed < 10; ++seed) {
      const auto rir = synth_rir(rt, rt + 0.4, kReferenceSampleRate, seed);
      const double est = schroeder_rt60(rir);
      CHECK(std::abs(est - rt) / rt < 0.15);
    }
  }
}

TEST_CASE("schroeder rejects degenerate inputs") {
  RoomImpulseResponse silent;
  silent.taps.assign(4000, 0.0);
  CHECK_THROWS_AS(schroeder_rt60(silent), InvalidInput);
  RoomImpulseResponse tiny;
  tiny.taps.assign(8, 1.0);
  CHECK_THROWS_AS(schroeder_rt60(tiny), InvalidInput);
}

TEST_CASE("fft convolution matches the direct sum") {
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const auto s = random_wave(400 + 150 * trial, 100 + trial);
    RoomImpulseResponse h;
    h.taps.resize(37 + 20 * trial);
    for (auto& t : h.taps) t = rng.normal();
    const auto got = convolve(s, h);
    const auto want = naive_convolve(s.samples, h.taps);
    REQUIRE(got.samples.size() == want.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < want.size(); ++i)
      worst = std::max(worst, std::abs(got.samples[i] - want[i]));
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("convolution with a unit impulse is the identity") {
  const auto s = random_wave(2000, 23);
  RoomImpulseResponse h;
  h.taps = {1.0};
  const auto got = convolve(s, h);
  for (std::size_t i = 0; i < s.samples.size(); ++i)
    CHECK(got.samples[i] == doctest::Approx(s.samples[i]).epsilon(1e-12));
}

TEST_CASE("mix_at_snr hits the requested ratio exactly") {
  const auto x = random_wave(5000, 31);
  const auto n = random_wave(5000, 32);
  for (const double snr : {-5.0, 0.0, 10.0, 20.0}) {
    const auto y = mix_at_snr(x, n, snr);
    double en = 0.0;
    for (std::size_t i = 0; i < x.samples.size(); ++i) {
      const double d = y.samples[i] - x.samples[i];
      en += d * d;
    }
    const double got = 10.0 * std::log10(energy(x) / en);
    CHECK(got == doctest::Approx(snr).epsilon(1e-9));
  }
}

TEST_CASE("mix_at_snr sentinels and rejections") {
  const auto x = random_wave(1000, 41);
  const auto n = random_wave(1000, 42);
  const auto y = mix_at_snr(x, n, kSnrInf);
  CHECK(y.samples == x.samples);

  auto short_n = n;
  short_n.samples.resize(500);
  CHECK_THROWS_AS(mix_at_snr(x, short_n, 10.0), InvalidInput);

  Waveform silent;
  silent.samples.assign(1000, 0.0);
  CHECK_THROWS_AS(mix_at_snr(silent, n, 10.0), InvalidInput);
  CHECK_THROWS_AS(mix_at_snr(x, silent, 10.0), InvalidInput);
  CHECK_THROWS_AS(mix_at_snr(x, n, std::nan("")), InvalidInput);
}

TEST_CASE("noise generators are deterministic and shaped") {
  const auto w1 = make_white_noise(16000, kReferenceSampleRate, 7);
  const auto w2 = make_white_noise(16000, kReferenceSampleRate, 7);
  CHECK(w1.samples == w2.samples);
  const auto p1 = make_pink_noise(16000, kReferenceSampleRate, 7);
  const auto p2 = make_pink_noise(16000, kReferenceSampleRate, 7);
  CHECK(p1.samples == p2.samples);
  CHECK_NOTHROW(w1.validate());
  CHECK_NOTHROW(p1.validate());

  // Spectral tilt: pink noise concentrates low, white noise is flat. Compare
  // the sub-500 Hz share of energy between the two.
  const auto band_share = [](const Waveform& w) {
    // Goertzel-free check: crude DFT energy below 500 Hz over one 4096 block.
    const std::size_t n = 4096;
    double low = 0.0, total = 0.0;
    for (std::size_t k = 1; k < n / 2; ++k) {
      double re = 0.0, im = 0.0;
      if (k > 256) continue;  // only need bins up to 1 kHz for the ratio
      for (std::size_t t = 0; t < n; ++t) {
        const double ang = -2.0 * 3.141592653589793 *
                           static_cast<double>(k * t) / static_cast<double>(n);
        re += w.samples[t] * std::cos(ang);
        im += w.samples[t] * std::sin(ang);
      }
      const double e = re * re + im * im;
      total += e;
      if (k <= 128) low += e;  // < 500 Hz at 16 kHz / 4096 bins
    }
    return low / total;
  };
  CHECK(band_share(p1) > band_share(w1) + 0.2);
}

TEST_CASE("bundled sources are deterministic and non-silent") {
  const auto s1 = make_pseudo_speech(1.0, kReferenceSampleRate, 5);
  const auto s2 = make_pseudo_speech(1.0, kReferenceSampleRate, 5);
  const auto s3 = make_pseudo_speech(1.0, kReferenceSampleRate, 6);
  CHECK(s1.samples == s2.samples);
  CHECK(s1.samples != s3.samples);
  CHECK(s1.samples.size() == static_cast<std::size_t>(kReferenceSampleRate));
  CHECK(energy(s1) > 0.0);
  CHECK_NOTHROW(s1.validate());

  const auto c1 = make_chirp(0.7, kReferenceSampleRate, 5);
  const auto c2 = make_chirp(0.7, kReferenceSampleRate, 5);
  CHECK(c1.samples == c2.samples);
  CHECK(energy(c1) > 0.0);
  CHECK_NOTHROW(c1.validate());
}

TEST_CASE("make_example composes the pipeline deterministically") {
  const auto clean = make_pseudo_speech(1.5, kReferenceSampleRate, 11);
  MixtureSpec spec;
  spec.rt60_s = 0.4;
  spec.snr_db = 15.0;
  spec.seed = 99;
  const auto a = make_example(clean, spec);
  const auto b = make_example(clean, spec);
  CHECK(a.reverberant.samples == b.reverberant.samples);
  CHECK(a.noisy.samples == b.noisy.samples);
  CHECK(a.clean.samples == clean.samples);
  CHECK(a.noisy.samples.size() == clean.samples.size());

  // The additive part obeys the requested SNR exactly.
  double en = 0.0;
  for (std::size_t i = 0; i < a.noisy.samples.size(); ++i) {
    const double d = a.noisy.samples[i] - a.reverberant.samples[i];
    en += d * d;
  }
  CHECK(10.0 * std::log10(energy(a.reverberant) / en) ==
        doctest::Approx(15.0).epsilon(1e-9));
}

TEST_CASE("anechoic noise-free example passes the input through") {
  const auto clean = make_pseudo_speech(0.8, kReferenceSampleRate, 13);
  MixtureSpec spec;
  spec.rt60_s = 0.0;
  spec.snr_db = kSnrInf;
  spec.seed = 1;
  const auto ex = make_example(clean, spec);
  double worst = 0.0;
  for (std::size_t i = 0; i < clean.samples.size(); ++i)
    worst = std::max(worst,
                     std::abs(ex.noisy.samples[i] - clean.samples[i]));
  CHECK(worst < 1e-12);
}

TEST_CASE("reverberant mixture matches direct convolution with its rir") {
  const auto clean = make_pseudo_speech(1.0, kReferenceSampleRate, 17);
  MixtureSpec spec;
  spec.rt60_s = 0.3;
  spec.snr_db = kSnrInf;
  spec.seed = 55;
  const auto ex = make_example(clean, spec);
  // make_example derives the RIR from the spec seed; reproduce it directly.
  const auto rir = synth_rir(0.3, std::max(0.05, 0.3 * 1.25),
                             kReferenceSampleRate,
                             Rng::derive(55, 1).next_u64());
  const auto want = naive_convolve(clean.samples, rir.taps);
  double worst = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i)
    worst = std::max(worst, std::abs(ex.reverberant.samples[i] - want[i]));
  CHECK(worst < 1e-9);
}
