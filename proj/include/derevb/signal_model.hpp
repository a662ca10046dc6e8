// derevb/signal_model.hpp

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

#ifndef DEREVB_SIGNAL_MODEL_HPP
#define DEREVB_SIGNAL_MODEL_HPP

#include <cstdint>
#include <limits>
#include <string>

#include "derevb/waveform.hpp"

namespace derevb {

// Synthetic exponential-decay room impulse response. Unit direct tap at
// t = 0, Gaussian tail shaped for a 60 dB decay over rt60_s.
struct RoomImpulseResponse {
  std::vector<double> taps;
  int sample_rate_hz = kReferenceSampleRate;
  double rt60_s = 0.0;
  uint64_t seed = 0;
};

enum class NoiseKind { kWhite, kPink, kRecorded, kNone };

struct MixtureSpec {
  double rt60_s = 0.5;
  double snr_db = 20.0;
  NoiseKind noise_kind = NoiseKind::kWhite;
  std::string noise_path;  // kRecorded only
  uint64_t seed = 0;

  // rt60_s = 0 is the anechoic (unit-impulse RIR) sentinel.
  void validate() const;
};

// SNR sentinel that disables the additive noise entirely.
constexpr double kSnrInf = std::numeric_limits<double>::infinity();

RoomImpulseResponse synth_rir(double rt60_s, double length_s,
                              int sample_rate_hz, uint64_t seed);

// Backward-integration RT60 estimate, line fit on the -5..-25 dB stretch of
// the energy decay curve.
double schroeder_rt60(const RoomImpulseResponse& rir);

// Full linear convolution truncated to len(s); FFT fast path.
Waveform convolve(const Waveform& s, const RoomImpulseResponse& h);

// y = x + g*n with g chosen so the energy SNR equals snr_db exactly.
// snr_db = +inf returns x unchanged.
Waveform mix_at_snr(const Waveform& x, const Waveform& noise, double snr_db);

Waveform make_white_noise(std::size_t len, int sample_rate_hz, uint64_t seed);
Waveform make_pink_noise(std::size_t len, int sample_rate_hz, uint64_t seed);

struct ExampleTriple {
  Waveform clean;
  Waveform reverberant;  // x = s * h
  Waveform noisy;        // y = x + g n
};

// Composes synth_rir, convolve and mix_at_snr; deterministic given the seed.
ExampleTriple make_example(const Waveform& clean, const MixtureSpec& spec);

// Bundled deterministic clean-source generators (no external corpus needed).
// Harmonic glides with moving resonances plus unvoiced noise segments.
Waveform make_pseudo_speech(double duration_s, int sample_rate_hz,
                            uint64_t seed);
// Sum of swept tones with a syllabic amplitude envelope.
Waveform make_chirp(double duration_s, int sample_rate_hz, uint64_t seed);

}  // namespace derevb

#endif  // DEREVB_SIGNAL_MODEL_HPP
