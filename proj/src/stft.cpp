// derevb/stft.cpp

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

#include "derevb/stft.hpp"

#include <algorithm>
#include <cmath>

#include "derevb/errors.hpp"
#include "derevb/fft.hpp"

namespace derevb {

void StftConfig::validate() const {
  if (frame_len <= 0 || !fft::is_pow2(static_cast<std::size_t>(frame_len)))
    throw InvalidInput("stft: frame_len must be a positive power of two");
  if (hop_len <= 0 || hop_len > frame_len)
    throw InvalidInput("stft: need 0 < hop_len <= frame_len");
  if (n_bins != frame_len / 2 + 1)
    throw InvalidInput("stft: n_bins must equal frame_len/2 + 1");
}

std::vector<double> window_coeffs(Window window, int frame_len) {
  std::vector<double> w(frame_len);
  for (int i = 0; i < frame_len; ++i) {
    double c = std::cos(2.0 * M_PI * i / frame_len);  // periodic variant
    switch (window) {
      case Window::kHamming: w[i] = 0.54 - 0.46 * c; break;
      case Window::kHann: w[i] = 0.5 - 0.5 * c; break;
    }
  }
  return w;
}

std::vector<double> window_coeffs(const StftConfig& cfg) {
  return window_coeffs(cfg.window, cfg.frame_len);
}

std::size_t stft_frame_count(std::size_t len, const StftConfig& cfg) {
  const std::size_t frame = static_cast<std::size_t>(cfg.frame_len);
  const std::size_t hop = static_cast<std::size_t>(cfg.hop_len);
  if (len <= frame) return 1;
  return 1 + (len - frame + hop - 1) / hop;
}

Spectrogram stft(const Waveform& wave, const StftConfig& cfg) {
  cfg.validate();
  if (wave.samples.empty()) throw InvalidInput("stft: empty waveform");
  wave.validate();

  const std::size_t n = static_cast<std::size_t>(cfg.frame_len);
  const std::size_t hop = static_cast<std::size_t>(cfg.hop_len);
  const std::size_t frames = stft_frame_count(wave.size(), cfg);
  const std::vector<double> win = window_coeffs(cfg);

  Spectrogram spec;
  spec.config = cfg;
  spec.n_frames = frames;
  spec.source_len = wave.size();
  spec.values.resize(frames * cfg.n_bins);

  std::vector<double> frame(n);
  for (std::size_t l = 0; l < frames; ++l) {
    const std::size_t start = l * hop;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t s = start + i;
      frame[i] = s < wave.size() ? wave.samples[s] * win[i] : 0.0;
    }
    auto bins = fft::rfft(frame.data(), n, n);
    std::copy(bins.begin(), bins.end(), spec.values.begin() + l * cfg.n_bins);
  }
  return spec;
}

std::vector<double> istft_core(const double* ri, std::size_t n_frames,
                               const StftConfig& cfg, std::size_t out_len) {
  cfg.validate();
  if (n_frames == 0) throw InvalidInput("istft: no frames");
  const std::size_t n = static_cast<std::size_t>(cfg.frame_len);
  const std::size_t hop = static_cast<std::size_t>(cfg.hop_len);
  const std::size_t k_bins = static_cast<std::size_t>(cfg.n_bins);
  const std::size_t span = n + (n_frames - 1) * hop;
  if (out_len > span) throw InvalidInput("istft: out_len exceeds frame span");
  const std::vector<double> win = window_coeffs(cfg);

  std::vector<double> acc(span, 0.0);
  std::vector<double> norm(span, 0.0);
  std::vector<std::complex<double>> bins(k_bins);
  for (std::size_t l = 0; l < n_frames; ++l) {
    for (std::size_t k = 0; k < k_bins; ++k)
      bins[k] = {ri[(l * k_bins + k) * 2], ri[(l * k_bins + k) * 2 + 1]};
    std::vector<double> frame = fft::irfft(bins.data(), n);
    const std::size_t off = l * hop;
    for (std::size_t i = 0; i < n; ++i) {
      acc[off + i] += frame[i] * win[i];
      norm[off + i] += win[i] * win[i];
    }
  }

  constexpr double kNormFloor = 1e-8;
  bool any_valid = false;
  std::vector<double> out(out_len, 0.0);
  for (std::size_t i = 0; i < out_len; ++i) {
    if (norm[i] > kNormFloor) {
      out[i] = acc[i] / norm[i];
      any_valid = true;
    }
  }
  if (!any_valid && out_len > 0)
    throw NumericalError("istft: overlap-add normalizer vanished everywhere");
  return out;
}

Waveform istft(const Spectrogram& spec) {
  const std::size_t k_bins = static_cast<std::size_t>(spec.config.n_bins);
  if (spec.values.size() != spec.n_frames * k_bins)
    throw ShapeError("istft: value buffer does not match frame count");
  std::vector<double> ri(spec.values.size() * 2);
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    ri[2 * i] = spec.values[i].real();
    ri[2 * i + 1] = spec.values[i].imag();
  }
  Waveform w;
  w.sample_rate_hz = kReferenceSampleRate;
  w.samples = istft_core(ri.data(), spec.n_frames, spec.config,
                         spec.source_len);
  return w;
}

MagPhase decompose(const Spectrogram& spec, double floor_eps) {
  if (floor_eps <= 0.0) throw InvalidInput("decompose: floor_eps must be > 0");
  MagPhase mp;
  mp.config = spec.config;
  mp.n_frames = spec.n_frames;
  mp.source_len = spec.source_len;
  mp.log_mag.resize(spec.values.size());
  mp.phase.resize(spec.values.size());
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    const std::complex<double> v = spec.values[i];
    mp.log_mag[i] = std::log(std::max(std::abs(v), floor_eps));
    // arg(0) = 0 keeps floored cells phase-neutral
    mp.phase[i] = (v.real() == 0.0 && v.imag() == 0.0) ? 0.0 : std::arg(v);
  }
  return mp;
}

Spectrogram recombine(const MagPhase& mag_src, const MagPhase& phase_src) {
  if (mag_src.n_frames != phase_src.n_frames ||
      mag_src.log_mag.size() != phase_src.phase.size() ||
      !(mag_src.config == phase_src.config))
    throw ShapeError("recombine: shape or config mismatch");
  Spectrogram spec;
  spec.config = mag_src.config;
  spec.n_frames = mag_src.n_frames;
  spec.source_len = std::min(mag_src.source_len, phase_src.source_len);
  spec.values.resize(mag_src.log_mag.size());
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    const double mag = std::exp(mag_src.log_mag[i]);
    spec.values[i] = std::polar(mag, phase_src.phase[i]);
  }
  return spec;
}

std::vector<double> mag_phase_to_ri(const MagPhase& mp) {
  std::vector<double> ri(mp.log_mag.size() * 2);
  for (std::size_t i = 0; i < mp.log_mag.size(); ++i) {
    const double mag = std::exp(mp.log_mag[i]);
    ri[2 * i] = mag * std::cos(mp.phase[i]);
    ri[2 * i + 1] = mag * std::sin(mp.phase[i]);
  }
  return ri;
}

}  // namespace derevb
