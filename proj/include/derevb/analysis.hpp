// derevb/analysis.hpp

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

#ifndef DEREVB_ANALYSIS_HPP
#define DEREVB_ANALYSIS_HPP

#include <string>
#include <vector>

#include "derevb/manifest.hpp"
#include "derevb/metrics.hpp"
#include "derevb/signal_model.hpp"
#include "derevb/stft.hpp"
#include "derevb/table.hpp"

namespace derevb {

// The three magnitude/phase recombination variants: which signal donates
// the magnitude plane and which donates the phase plane before resynthesis.
struct SwapVariants {
  Waveform noisy_noisy;   // baseline: noisy magnitude + noisy phase
  Waveform noisy_clean;   // noisy magnitude + clean phase
  Waveform clean_noisy;   // clean magnitude + noisy phase
  Waveform clean_clean;   // sanity: clean magnitude + clean phase
};

SwapVariants swap_variants(const Waveform& clean, const Waveform& noisy,
                           const StftConfig& cfg);

struct VariantScore {
  std::string label;
  MetricsReport mean;  // metric means over utterances
};

struct SwapStudy {
  std::vector<VariantScore> rows;
  std::size_t n_utterances = 0;
};

// Evaluates all variants against the clean reference, averaged over the
// corpus.  Row order: noisy/noisy, noisy-mag/clean-phase,
// clean-mag/noisy-phase, clean/clean.
SwapStudy run_swap_study(const std::vector<ExampleTriple>& triples,
                         const StftConfig& cfg,
                         const LpcFrameConfig& metric_cfg = {});
SwapStudy run_swap_study(const std::vector<ManifestEntry>& manifest,
                         const StftConfig& cfg,
                         const LpcFrameConfig& metric_cfg = {});

Table swap_study_table(const SwapStudy& study);

}  // namespace derevb

#endif  // DEREVB_ANALYSIS_HPP
