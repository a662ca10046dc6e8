// derevb/metrics.hpp

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

#ifndef DEREVB_METRICS_HPP
#define DEREVB_METRICS_HPP

#include <cstddef>
#include <vector>

#include "derevb/waveform.hpp"

namespace derevb {

// Frame-level analysis settings shared by the LPC-based measures and the
// frequency-weighted segmental SNR.
struct LpcFrameConfig {
  int frame_len = 512;
  int hop = 256;
  int lpc_order = 16;
  // Frames whose reference energy falls this far below the loudest frame
  // are dropped from the frame averages.
  double energy_gate_db = -40.0;
  int n_mel_bands = 25;          // fwSegSNR filterbank size
  double band_weight_exp = 0.2;  // reference-band weighting power
  double llr_trim = 0.95;        // keep the smallest 95% of LLR frames

  void validate() const;
};

struct MetricsReport {
  double si_sdr_db = 0.0;
  double cd = 0.0;            // cepstral distance
  double llr = 0.0;           // log-likelihood ratio
  double fw_snr_seg_db = 0.0; // frequency-weighted segmental SNR
  std::size_t n_frames_scored = 0;
};

// Scale-invariant SDR in dB; the estimate is projected onto the reference
// before computing the error ratio.  Saturates at +/-100 dB.
double si_sdr(const Waveform& ref, const Waveform& est);
double si_sdr(const std::vector<double>& ref, const std::vector<double>& est);

// Mean LPC-cepstral distance over energy-gated frames, each frame clipped
// to [0, 10].
double cepstral_distance(const Waveform& ref, const Waveform& est,
                         const LpcFrameConfig& cfg = {});

// Mean log-likelihood ratio over the smallest llr_trim share of the
// energy-gated frames; per-frame negatives are clipped to zero.
double llr(const Waveform& ref, const Waveform& est,
           const LpcFrameConfig& cfg = {});

// Frequency-weighted segmental SNR in dB over mel bands, per-band values
// clipped to [-10, 35] and weighted by band_ref^band_weight_exp.
double fw_seg_snr(const Waveform& ref, const Waveform& est,
                  const LpcFrameConfig& cfg = {});

MetricsReport evaluate_pair(const Waveform& ref, const Waveform& est,
                            const LpcFrameConfig& cfg = {});

// Building blocks, exposed for reuse and testing.

// Autocorrelation-method LPC: returns the prediction-error filter
// [1, a_1, ..., a_p] minimizing the forward prediction error of `frame`.
std::vector<double> lpc_coeffs(const std::vector<double>& frame, int order);

// First `order`+1 autocorrelation lags of `frame`.
std::vector<double> autocorr(const std::vector<double>& frame, int order);

// LPC cepstrum c_1..c_n of the all-pole model 1/A(z) given the error filter.
std::vector<double> lpc_cepstrum(const std::vector<double>& a, int n);

// Triangular mel filterbank over one-sided bins; weights[band][bin].
std::vector<std::vector<double>> mel_filterbank(int n_bands, int n_bins,
                                                int frame_len,
                                                int sample_rate_hz);

// Weighted, clipped per-frame SNR given band magnitudes (fwSegSNR core).
double banded_frame_snr(const std::vector<double>& ref_band_mag,
                        const std::vector<double>& est_band_mag,
                        double weight_exp);

}  // namespace derevb

#endif  // DEREVB_METRICS_HPP
