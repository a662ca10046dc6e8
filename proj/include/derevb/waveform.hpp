// derevb/waveform.hpp

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

#ifndef DEREVB_WAVEFORM_HPP
#define DEREVB_WAVEFORM_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace derevb {

constexpr int kReferenceSampleRate = 16000;

// Mono time-domain signal; the universal I/O currency of the pipeline.
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = kReferenceSampleRate;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }

  // Throws InvalidInput on NaN/Inf samples or nonpositive sample rate.
  void validate() const;
};

double energy(const Waveform& w);

enum class WavFormat { kPcm16, kFloat32 };

// RIFF/WAVE, mono only. 16-bit PCM and 32-bit IEEE float supported.
// Multi-channel files are rejected with a clear error.
Waveform read_wav(const std::string& path);
void write_wav(const std::string& path, const Waveform& w,
               WavFormat format = WavFormat::kFloat32);

}  // namespace derevb

#endif  // DEREVB_WAVEFORM_HPP
