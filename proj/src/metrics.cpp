// derevb/metrics.cpp

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

#include "derevb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "derevb/errors.hpp"
#include "derevb/fft.hpp"
#include "derevb/stft.hpp"

namespace derevb {

namespace {

constexpr double kSiSdrCapDb = 100.0;
constexpr double kBandSnrFloorDb = -10.0;
constexpr double kBandSnrCeilDb = 35.0;
constexpr double kFrameCdCeil = 10.0;

double mel_of_hz(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double hz_of_mel(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

struct FramePair {
  std::vector<double> ref;  // windowed
  std::vector<double> est;  // windowed
};

// Windowed, full frames only; frames whose reference energy falls below the
// gate (relative to the loudest reference frame) are dropped.
std::vector<FramePair> gated_frames(const Waveform& ref, const Waveform& est,
                                    const LpcFrameConfig& cfg) {
  cfg.validate();
  if (ref.sample_rate_hz != est.sample_rate_hz)
    throw InvalidInput("metrics: sample-rate mismatch");
  const std::size_t len = std::min(ref.size(), est.size());
  const auto flen = static_cast<std::size_t>(cfg.frame_len);
  if (len < flen) throw InvalidInput("metrics: signal shorter than one frame");

  const auto win = window_coeffs(Window::kHamming, cfg.frame_len);
  std::vector<FramePair> frames;
  std::vector<double> ref_energy;
  for (std::size_t pos = 0; pos + flen <= len;
       pos += static_cast<std::size_t>(cfg.hop)) {
    FramePair fp;
    fp.ref.resize(flen);
    fp.est.resize(flen);
    double e = 0.0;
    for (std::size_t i = 0; i < flen; ++i) {
      fp.ref[i] = ref.samples[pos + i] * win[i];
      fp.est[i] = est.samples[pos + i] * win[i];
      e += fp.ref[i] * fp.ref[i];
    }
    frames.push_back(std::move(fp));
    ref_energy.push_back(e);
  }
  const double peak = *std::max_element(ref_energy.begin(), ref_energy.end());
  if (peak <= 0.0) throw InvalidInput("metrics: silent reference");
  const double gate = peak * std::pow(10.0, cfg.energy_gate_db / 10.0);
  std::vector<FramePair> kept;
  for (std::size_t i = 0; i < frames.size(); ++i)
    if (ref_energy[i] >= gate) kept.push_back(std::move(frames[i]));
  if (kept.empty()) throw InvalidInput("metrics: no frames above gate");
  return kept;
}

// a^T R a with R the Toeplitz matrix built from lags r[0..p].
double lpc_quadratic(const std::vector<double>& a,
                     const std::vector<double>& r) {
  const std::size_t n = a.size();
  double q = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      q += a[i] * a[j] * r[i > j ? i - j : j - i];
  return q;
}

double frame_cd(const FramePair& fp, const LpcFrameConfig& cfg) {
  const auto a_ref = lpc_coeffs(fp.ref, cfg.lpc_order);
  const auto a_est = lpc_coeffs(fp.est, cfg.lpc_order);
  const auto c_ref = lpc_cepstrum(a_ref, cfg.lpc_order);
  const auto c_est = lpc_cepstrum(a_est, cfg.lpc_order);
  double ss = 0.0;
  for (int k = 1; k <= cfg.lpc_order; ++k) {
    const double d = c_ref[k] - c_est[k];
    ss += d * d;
  }
  const double scale = 10.0 / std::log(10.0);
  return std::clamp(scale * std::sqrt(2.0 * ss), 0.0, kFrameCdCeil);
}

double mean_cd(const std::vector<FramePair>& frames,
               const LpcFrameConfig& cfg) {
  double sum = 0.0;
  for (const auto& fp : frames) sum += frame_cd(fp, cfg);
  return sum / static_cast<double>(frames.size());
}

double mean_llr(const std::vector<FramePair>& frames,
                const LpcFrameConfig& cfg) {
  std::vector<double> vals;
  vals.reserve(frames.size());
  for (const auto& fp : frames) {
    const auto r_ref = autocorr(fp.ref, cfg.lpc_order);
    const auto a_ref = lpc_coeffs(fp.ref, cfg.lpc_order);
    const auto a_est = lpc_coeffs(fp.est, cfg.lpc_order);
    const double num = lpc_quadratic(a_est, r_ref);
    const double den = lpc_quadratic(a_ref, r_ref);
    if (num <= 0.0 || den <= 0.0) continue;  // numerically degenerate frame
    vals.push_back(std::max(0.0, std::log(num / den)));
  }
  if (vals.empty()) throw NumericalError("llr: no usable frames");
  // Discard the largest (1 - llr_trim) share of frame values as outliers.
  std::sort(vals.begin(), vals.end());
  const auto kept = std::max<std::size_t>(
      1,
      static_cast<std::size_t>(std::floor(vals.size() * cfg.llr_trim + 0.5)));
  const double sum = std::accumulate(vals.begin(), vals.begin() + kept, 0.0);
  return sum / static_cast<double>(kept);
}

double mean_fw_seg_snr(const std::vector<FramePair>& frames,
                       const LpcFrameConfig& cfg, int sample_rate_hz) {
  const int n_bins = cfg.frame_len / 2 + 1;
  const auto bank =
      mel_filterbank(cfg.n_mel_bands, n_bins, cfg.frame_len, sample_rate_hz);
  double total = 0.0;
  std::vector<double> br_mag(cfg.n_mel_bands), be_mag(cfg.n_mel_bands);
  for (const auto& fp : frames) {
    const auto br = fft::rfft(fp.ref.data(), fp.ref.size(),
                              static_cast<std::size_t>(cfg.frame_len));
    const auto be = fft::rfft(fp.est.data(), fp.est.size(),
                              static_cast<std::size_t>(cfg.frame_len));
    for (int b = 0; b < cfg.n_mel_bands; ++b) {
      double pr = 0.0, pe = 0.0;
      for (int k = 0; k < n_bins; ++k) {
        if (bank[b][k] == 0.0) continue;
        pr += bank[b][k] * std::norm(br[k]);
        pe += bank[b][k] * std::norm(be[k]);
      }
      br_mag[b] = std::sqrt(pr);
      be_mag[b] = std::sqrt(pe);
    }
    total += banded_frame_snr(br_mag, be_mag, cfg.band_weight_exp);
  }
  return total / static_cast<double>(frames.size());
}

}  // namespace

void LpcFrameConfig::validate() const {
  if (frame_len <= 0 || !fft::is_pow2(static_cast<std::size_t>(frame_len)))
    throw ConfigError("frame_len", "must be a positive power of two");
  if (hop <= 0 || hop > frame_len)
    throw ConfigError("hop", "must be in (0, frame_len]");
  if (lpc_order < 1 || lpc_order >= frame_len)
    throw ConfigError("lpc_order", "must be in [1, frame_len)");
  if (energy_gate_db >= 0.0)
    throw ConfigError("energy_gate_db", "must be negative");
  if (n_mel_bands < 1 || n_mel_bands > frame_len / 2)
    throw ConfigError("n_mel_bands", "must be in [1, frame_len/2]");
  if (band_weight_exp < 0.0)
    throw ConfigError("band_weight_exp", "must be >= 0");
  if (llr_trim <= 0.0 || llr_trim > 1.0)
    throw ConfigError("llr_trim", "must be in (0, 1]");
}

double si_sdr(const std::vector<double>& ref, const std::vector<double>& est) {
  if (ref.size() != est.size()) throw InvalidInput("si_sdr: length mismatch");
  if (ref.empty()) throw InvalidInput("si_sdr: empty input");
  double dot = 0.0, ref_e = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    dot += est[i] * ref[i];
    ref_e += ref[i] * ref[i];
  }
  if (ref_e <= 0.0) throw InvalidInput("si_sdr: silent reference");
  const double alpha = dot / ref_e;
  const double target_e = alpha * alpha * ref_e;
  double resid_e = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = est[i] - alpha * ref[i];
    resid_e += d * d;
  }
  if (target_e <= 0.0) return -kSiSdrCapDb;
  if (resid_e <= 0.0) return kSiSdrCapDb;
  return std::clamp(10.0 * std::log10(target_e / resid_e), -kSiSdrCapDb,
                    kSiSdrCapDb);
}

double si_sdr(const Waveform& ref, const Waveform& est) {
  if (ref.sample_rate_hz != est.sample_rate_hz)
    throw InvalidInput("si_sdr: sample-rate mismatch");
  const std::size_t len = std::min(ref.size(), est.size());
  return si_sdr(
      std::vector<double>(ref.samples.begin(), ref.samples.begin() + len),
      std::vector<double>(est.samples.begin(), est.samples.begin() + len));
}

std::vector<double> autocorr(const std::vector<double>& frame, int order) {
  if (order < 0 || static_cast<std::size_t>(order) >= frame.size())
    throw InvalidInput("autocorr: bad order");
  std::vector<double> r(order + 1, 0.0);
  for (int k = 0; k <= order; ++k)
    for (std::size_t n = k; n < frame.size(); ++n)
      r[k] += frame[n] * frame[n - k];
  return r;
}

std::vector<double> lpc_coeffs(const std::vector<double>& frame, int order) {
  auto r = autocorr(frame, order);
  std::vector<double> a(order + 1, 0.0);
  a[0] = 1.0;
  if (r[0] <= 0.0) return a;  // silent frame: degenerate flat model
  double err = r[0];
  for (int i = 1; i <= order; ++i) {
    double acc = r[i];
    for (int j = 1; j < i; ++j) acc += a[j] * r[i - j];
    if (err <= 0.0) break;
    const double k = -acc / err;
    std::vector<double> prev(a.begin(), a.begin() + i);
    for (int j = 1; j < i; ++j) a[j] = prev[j] + k * prev[i - j];
    a[i] = k;
    err *= 1.0 - k * k;
  }
  return a;
}

std::vector<double> lpc_cepstrum(const std::vector<double>& a, int n) {
  if (a.empty() || a[0] != 1.0)
    throw InvalidInput("lpc_cepstrum: expected error filter with a[0] == 1");
  const int p = static_cast<int>(a.size()) - 1;
  std::vector<double> c(n + 1, 0.0);  // c[0] unused (gain term)
  for (int m = 1; m <= n; ++m) {
    double acc = m <= p ? -a[m] : 0.0;
    for (int k = 1; k < m; ++k)
      if (m - k <= p) acc -= (static_cast<double>(k) / m) * c[k] * a[m - k];
    c[m] = acc;
  }
  return c;
}

double cepstral_distance(const Waveform& ref, const Waveform& est,
                         const LpcFrameConfig& cfg) {
  return mean_cd(gated_frames(ref, est, cfg), cfg);
}

double llr(const Waveform& ref, const Waveform& est,
           const LpcFrameConfig& cfg) {
  return mean_llr(gated_frames(ref, est, cfg), cfg);
}

std::vector<std::vector<double>> mel_filterbank(int n_bands, int n_bins,
                                                int frame_len,
                                                int sample_rate_hz) {
  const double mel_max = mel_of_hz(sample_rate_hz / 2.0);
  std::vector<double> edges(n_bands + 2);
  for (int i = 0; i < n_bands + 2; ++i)
    edges[i] = hz_of_mel(mel_max * i / (n_bands + 1));
  std::vector<std::vector<double>> w(n_bands, std::vector<double>(n_bins, 0.0));
  for (int b = 0; b < n_bands; ++b) {
    const double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate_hz / frame_len;
      if (f <= lo || f >= hi) continue;
      w[b][k] = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
    }
  }
  return w;
}

double banded_frame_snr(const std::vector<double>& ref_band_mag,
                        const std::vector<double>& est_band_mag,
                        double weight_exp) {
  if (ref_band_mag.size() != est_band_mag.size())
    throw ShapeError("banded_frame_snr: band count mismatch");
  double wsum = 0.0, wsnr = 0.0;
  for (std::size_t b = 0; b < ref_band_mag.size(); ++b) {
    const double br = ref_band_mag[b], be = est_band_mag[b];
    const double weight = std::pow(br, weight_exp);
    const double diff = (br - be) * (br - be);
    double snr;
    if (br <= 0.0)
      snr = kBandSnrFloorDb;
    else if (diff <= 0.0)
      snr = kBandSnrCeilDb;
    else
      snr = std::clamp(10.0 * std::log10(br * br / diff), kBandSnrFloorDb,
                       kBandSnrCeilDb);
    wsum += weight;
    wsnr += weight * snr;
  }
  return wsum > 0.0 ? wsnr / wsum : kBandSnrFloorDb;
}

double fw_seg_snr(const Waveform& ref, const Waveform& est,
                  const LpcFrameConfig& cfg) {
  return mean_fw_seg_snr(gated_frames(ref, est, cfg), cfg,
                         ref.sample_rate_hz);
}

MetricsReport evaluate_pair(const Waveform& ref, const Waveform& est,
                            const LpcFrameConfig& cfg) {
  const auto frames = gated_frames(ref, est, cfg);
  MetricsReport rep;
  rep.si_sdr_db = si_sdr(ref, est);
  rep.cd = mean_cd(frames, cfg);
  rep.llr = mean_llr(frames, cfg);
  rep.fw_snr_seg_db = mean_fw_seg_snr(frames, cfg, ref.sample_rate_hz);
  rep.n_frames_scored = frames.size();
  return rep;
}

}  // namespace derevb
