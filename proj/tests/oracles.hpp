// tests/oracles.hpp

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

// Brute-force re-implementations written from the metric definitions; these
// share no code with the library versions (naive DFT, explicit Toeplitz
// products, inline window formula).  Used by the unit tests and by the
// acceptance gate.

#ifndef DEREVB_TESTS_ORACLES_HPP
#define DEREVB_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "derevb/metrics.hpp"
#include "derevb/waveform.hpp"

namespace derevb::oracle {

struct OFrame {
  std::vector<double> ref, est;
};

inline std::vector<OFrame> oracle_frames(const Waveform& ref,
                                         const Waveform& est,
                                         const LpcFrameConfig& cfg) {
  const std::size_t len = std::min(ref.size(), est.size());
  const std::size_t flen = static_cast<std::size_t>(cfg.frame_len);
  std::vector<double> win(flen);
  for (std::size_t i = 0; i < flen; ++i)
    win[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi *
                                    static_cast<double>(i) /
                                    static_cast<double>(flen));
  std::vector<OFrame> frames;
  std::vector<double> e;
  for (std::size_t pos = 0; pos + flen <= len;
       pos += static_cast<std::size_t>(cfg.hop)) {
    OFrame f;
    f.ref.resize(flen);
    f.est.resize(flen);
    double fe = 0.0;
    for (std::size_t i = 0; i < flen; ++i) {
      f.ref[i] = ref.samples[pos + i] * win[i];
      f.est[i] = est.samples[pos + i] * win[i];
      fe += f.ref[i] * f.ref[i];
    }
    frames.push_back(std::move(f));
    e.push_back(fe);
  }
  const double peak = *std::max_element(e.begin(), e.end());
  const double gate = peak * std::pow(10.0, cfg.energy_gate_db / 10.0);
  std::vector<OFrame> kept;
  for (std::size_t i = 0; i < frames.size(); ++i)
    if (e[i] >= gate) kept.push_back(std::move(frames[i]));
  return kept;
}

inline std::vector<double> oracle_autocorr(const std::vector<double>& x,
                                           int p) {
  std::vector<double> r(p + 1, 0.0);
  for (int k = 0; k <= p; ++k)
    for (std::size_t n = k; n < x.size(); ++n) r[k] += x[n] * x[n - k];
  return r;
}

// Levinson-Durbin recursion for the prediction-error filter [1, a1..ap].
inline std::vector<double> oracle_lpc(const std::vector<double>& x, int p) {
  const auto r = oracle_autocorr(x, p);
  std::vector<double> a(p + 1, 0.0);
  a[0] = 1.0;
  if (r[0] <= 0.0) return a;
  double err = r[0];
  for (int i = 1; i <= p; ++i) {
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

inline std::vector<double> oracle_cepstrum(const std::vector<double>& a,
                                           int n) {
  const int p = static_cast<int>(a.size()) - 1;
  std::vector<double> c(n + 1, 0.0);
  for (int m = 1; m <= n; ++m) {
    double acc = m <= p ? -a[m] : 0.0;
    for (int k = 1; k < m; ++k)
      if (m - k <= p) acc -= (static_cast<double>(k) / m) * c[k] * a[m - k];
    c[m] = acc;
  }
  return c;
}

inline double oracle_cd(const Waveform& ref, const Waveform& est,
                        const LpcFrameConfig& cfg) {
  const auto frames = oracle_frames(ref, est, cfg);
  double sum = 0.0;
  for (const auto& f : frames) {
    const auto cr =
        oracle_cepstrum(oracle_lpc(f.ref, cfg.lpc_order), cfg.lpc_order);
    const auto ce =
        oracle_cepstrum(oracle_lpc(f.est, cfg.lpc_order), cfg.lpc_order);
    double ss = 0.0;
    for (int k = 1; k <= cfg.lpc_order; ++k)
      ss += (cr[k] - ce[k]) * (cr[k] - ce[k]);
    sum += std::clamp((10.0 / std::log(10.0)) * std::sqrt(2.0 * ss), 0.0, 10.0);
  }
  return sum / static_cast<double>(frames.size());
}

inline double oracle_llr(const Waveform& ref, const Waveform& est,
                         const LpcFrameConfig& cfg) {
  const auto frames = oracle_frames(ref, est, cfg);
  std::vector<double> vals;
  for (const auto& f : frames) {
    const auto r = oracle_autocorr(f.ref, cfg.lpc_order);
    const auto ar = oracle_lpc(f.ref, cfg.lpc_order);
    const auto ae = oracle_lpc(f.est, cfg.lpc_order);
    const auto quad = [&r](const std::vector<double>& a) {
      double q = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j)
          q += a[i] * a[j] * r[i > j ? i - j : j - i];
      return q;
    };
    const double num = quad(ae), den = quad(ar);
    if (num <= 0.0 || den <= 0.0) continue;
    vals.push_back(std::max(0.0, std::log(num / den)));
  }
  std::sort(vals.begin(), vals.end());
  const auto kept = std::max<std::size_t>(
      1,
      static_cast<std::size_t>(std::floor(vals.size() * cfg.llr_trim + 0.5)));
  double sum = 0.0;
  for (std::size_t i = 0; i < kept; ++i) sum += vals[i];
  return sum / static_cast<double>(kept);
}

inline double oracle_fw_seg_snr(const Waveform& ref, const Waveform& est,
                                const LpcFrameConfig& cfg) {
  const auto frames = oracle_frames(ref, est, cfg);
  const int n_bins = cfg.frame_len / 2 + 1;
  const auto mel = [](double f) {
    return 2595.0 * std::log10(1.0 + f / 700.0);
  };
  const auto hz = [](double m) {
    return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0);
  };
  const double mel_max = mel(ref.sample_rate_hz / 2.0);
  std::vector<double> edges(cfg.n_mel_bands + 2);
  for (int i = 0; i < cfg.n_mel_bands + 2; ++i)
    edges[i] = hz(mel_max * i / (cfg.n_mel_bands + 1));

  const auto spectrum = [&](const std::vector<double>& x) {
    std::vector<std::complex<double>> bins(n_bins);
    for (int k = 0; k < n_bins; ++k) {
      std::complex<double> acc = 0.0;
      for (std::size_t t = 0; t < x.size(); ++t) {
        const double ang =
            -2.0 * std::numbers::pi * k * static_cast<double>(t) /
            cfg.frame_len;
        acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
      }
      bins[k] = acc;
    }
    return bins;
  };

  double total = 0.0;
  for (const auto& f : frames) {
    const auto br = spectrum(f.ref);
    const auto be = spectrum(f.est);
    double wsum = 0.0, wsnr = 0.0;
    for (int b = 0; b < cfg.n_mel_bands; ++b) {
      double pr = 0.0, pe = 0.0;
      for (int k = 0; k < n_bins; ++k) {
        const double fr =
            static_cast<double>(k) * ref.sample_rate_hz / cfg.frame_len;
        double w = 0.0;
        if (fr > edges[b] && fr < edges[b + 2])
          w = fr <= edges[b + 1]
                  ? (fr - edges[b]) / (edges[b + 1] - edges[b])
                  : (edges[b + 2] - fr) / (edges[b + 2] - edges[b + 1]);
        if (w == 0.0) continue;
        pr += w * std::norm(br[k]);
        pe += w * std::norm(be[k]);
      }
      const double mr = std::sqrt(pr), me = std::sqrt(pe);
      const double weight = std::pow(mr, cfg.band_weight_exp);
      const double diff = (mr - me) * (mr - me);
      double snr;
      if (mr <= 0.0)
        snr = -10.0;
      else if (diff <= 0.0)
        snr = 35.0;
      else
        snr = std::clamp(10.0 * std::log10(mr * mr / diff), -10.0, 35.0);
      wsum += weight;
      wsnr += weight * snr;
    }
    total += wsum > 0.0 ? wsnr / wsum : -10.0;
  }
  return total / static_cast<double>(frames.size());
}

}  // namespace derevb::oracle

#endif  // DEREVB_TESTS_ORACLES_HPP
