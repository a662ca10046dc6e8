// derevb/stft.hpp

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

#ifndef DEREVB_STFT_HPP
#define DEREVB_STFT_HPP

#include <complex>
#include <cstddef>
#include <vector>

#include "derevb/waveform.hpp"

namespace derevb {

enum class Window { kHamming, kHann };

// Reference configuration: 512-sample frames, hop 256, periodic Hamming,
// one-sided spectrum of 257 bins at 16 kHz.
struct StftConfig {
  int frame_len = 512;
  int hop_len = 256;
  Window window = Window::kHamming;
  int n_bins = 257;

  void validate() const;
  bool operator==(const StftConfig&) const = default;
};

// Window coefficients (periodic variant).
std::vector<double> window_coeffs(Window window, int frame_len);
std::vector<double> window_coeffs(const StftConfig& cfg);

// Complex time-frequency matrix, frame-major: values[l * n_bins + k].
struct Spectrogram {
  std::vector<std::complex<double>> values;
  StftConfig config;
  std::size_t n_frames = 0;
  std::size_t source_len = 0;

  std::complex<double>& at(std::size_t l, std::size_t k) {
    return values[l * config.n_bins + k];
  }
  std::complex<double> at(std::size_t l, std::size_t k) const {
    return values[l * config.n_bins + k];
  }
};

// Natural-log magnitude and wrapped phase planes, same layout as Spectrogram.
struct MagPhase {
  std::vector<double> log_mag;
  std::vector<double> phase;  // radians in (-pi, pi]
  StftConfig config;
  std::size_t n_frames = 0;
  std::size_t source_len = 0;
};

// Magnitude floor applied before the log; keeps Eq-style MSE targets finite.
constexpr double kMagFloorEps = 1e-7;

// Number of frames produced for a given input length.
std::size_t stft_frame_count(std::size_t len, const StftConfig& cfg);

// Analysis transform. The final partial frame is zero-padded.
Spectrogram stft(const Waveform& wave, const StftConfig& cfg);

// Weighted overlap-add synthesis with window-squared normalization,
// truncated to source_len. Samples whose normalizer falls below 1e-8 are
// zeroed; if the normalizer is degenerate everywhere, NumericalError.
Waveform istft(const Spectrogram& spec);

// Same synthesis on raw one-sided RI planes laid out [l][k][re,im]; used by
// the differentiable layer so both paths share one implementation.
// out_len <= frame_len + (n_frames-1) * hop; the returned signal has that
// length.
std::vector<double> istft_core(const double* ri, std::size_t n_frames,
                               const StftConfig& cfg, std::size_t out_len);

MagPhase decompose(const Spectrogram& spec, double floor_eps = kMagFloorEps);

// exp(mag_src.log_mag) * exp(i * phase_src.phase). Shapes and configs must
// match; the shorter source_len wins.
Spectrogram recombine(const MagPhase& mag_src, const MagPhase& phase_src);

// Real/imaginary planes, layout [l][k][2]; exact inverse of decompose up to
// the magnitude floor.
std::vector<double> mag_phase_to_ri(const MagPhase& mp);

}  // namespace derevb

#endif  // DEREVB_STFT_HPP
