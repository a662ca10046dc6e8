// derevb/analysis.cpp

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

#include "derevb/analysis.hpp"

#include "derevb/errors.hpp"

namespace derevb {

SwapVariants swap_variants(const Waveform& clean, const Waveform& noisy,
                           const StftConfig& cfg) {
  if (clean.size() != noisy.size())
    throw InvalidInput("swap_variants: length mismatch");
  if (clean.sample_rate_hz != noisy.sample_rate_hz)
    throw InvalidInput("swap_variants: sample-rate mismatch");
  const MagPhase c = decompose(stft(clean, cfg));
  const MagPhase n = decompose(stft(noisy, cfg));
  SwapVariants v;
  v.noisy_noisy = istft(recombine(n, n));
  v.noisy_clean = istft(recombine(n, c));
  v.clean_noisy = istft(recombine(c, n));
  v.clean_clean = istft(recombine(c, c));
  return v;
}

SwapStudy run_swap_study(const std::vector<ExampleTriple>& triples,
                         const StftConfig& cfg,
                         const LpcFrameConfig& metric_cfg) {
  if (triples.empty()) throw InvalidInput("swap study: empty corpus");
  static const char* kLabels[4] = {
      "noisy-mag/noisy-phase", "noisy-mag/clean-phase",
      "clean-mag/noisy-phase", "clean-mag/clean-phase"};
  double acc[4][4] = {};
  std::size_t frames_acc[4] = {};
  for (const auto& triple : triples) {
    const auto v = swap_variants(triple.clean, triple.noisy, cfg);
    const Waveform* est[4] = {&v.noisy_noisy, &v.noisy_clean, &v.clean_noisy,
                              &v.clean_clean};
    for (int i = 0; i < 4; ++i) {
      const auto rep = evaluate_pair(triple.clean, *est[i], metric_cfg);
      acc[i][0] += rep.llr;
      acc[i][1] += rep.cd;
      acc[i][2] += rep.si_sdr_db;
      acc[i][3] += rep.fw_snr_seg_db;
      frames_acc[i] += rep.n_frames_scored;
    }
  }
  SwapStudy study;
  study.n_utterances = triples.size();
  const auto n = static_cast<double>(triples.size());
  for (int i = 0; i < 4; ++i) {
    VariantScore row;
    row.label = kLabels[i];
    row.mean.llr = acc[i][0] / n;
    row.mean.cd = acc[i][1] / n;
    row.mean.si_sdr_db = acc[i][2] / n;
    row.mean.fw_snr_seg_db = acc[i][3] / n;
    row.mean.n_frames_scored = frames_acc[i];
    study.rows.push_back(std::move(row));
  }
  return study;
}

SwapStudy run_swap_study(const std::vector<ManifestEntry>& manifest,
                         const StftConfig& cfg,
                         const LpcFrameConfig& metric_cfg) {
  if (manifest.empty()) throw InvalidInput("swap study: empty manifest");
  std::vector<ExampleTriple> triples;
  triples.reserve(manifest.size());
  for (const auto& entry : manifest) triples.push_back(load_example(entry));
  return run_swap_study(triples, cfg, metric_cfg);
}

Table swap_study_table(const SwapStudy& study) {
  Table t;
  t.title = "Magnitude/phase swap study (means over " +
            std::to_string(study.n_utterances) + " utterances)";
  t.columns = {"variant", "LLR", "CD", "SI-SDR (dB)"};
  for (const auto& row : study.rows)
    t.add_row({row.label, fmt_fixed(row.mean.llr, 3), fmt_fixed(row.mean.cd, 3),
               fmt_fixed(row.mean.si_sdr_db, 2)});
  return t;
}

}  // namespace derevb
