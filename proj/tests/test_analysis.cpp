// tests/test_analysis.cpp

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

#include <vector>

#include "derevb/analysis.hpp"
#include "derevb/errors.hpp"
#include "derevb/metrics.hpp"
#include "doctest.h"

namespace {

using namespace derevb;

std::vector<ExampleTriple> small_corpus(std::size_t n) {
  std::vector<ExampleTriple> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto clean =
        make_pseudo_speech(1.6, kReferenceSampleRate, 3000 + i);
    MixtureSpec spec;
    spec.rt60_s = 0.5;
    spec.snr_db = 20.0;
    spec.seed = 4000 + i;
    out.push_back(make_example(clean, spec));
  }
  return out;
}

}  // namespace

TEST_CASE("swap variants keep length and sanity-check the identity row") {
  const auto corpus = small_corpus(1);
  StftConfig cfg;
  const auto v = swap_variants(corpus[0].clean, corpus[0].noisy, cfg);
  CHECK(v.noisy_noisy.size() == corpus[0].clean.size());
  CHECK(v.noisy_clean.size() == corpus[0].clean.size());
  CHECK(v.clean_noisy.size() == corpus[0].clean.size());
  CHECK(v.clean_clean.size() == corpus[0].clean.size());

  // clean-mag/clean-phase is a pure STFT round trip of the clean signal.
  CHECK(si_sdr(corpus[0].clean, v.clean_clean) > 60.0);
  CHECK(cepstral_distance(corpus[0].clean, v.clean_clean) < 0.05);

  // noisy-mag/noisy-phase is a round trip of the noisy signal.
  CHECK(si_sdr(corpus[0].noisy, v.noisy_noisy) > 60.0);
}

TEST_CASE("swap study reproduces the decoupling orderings") {
  const auto corpus = small_corpus(3);
  StftConfig cfg;
  const auto study = run_swap_study(corpus, cfg);
  REQUIRE(study.rows.size() == 4);
  CHECK(study.n_utterances == 3);
  CHECK(study.rows[0].label == "noisy-mag/noisy-phase");
  CHECK(study.rows[1].label == "noisy-mag/clean-phase");
  CHECK(study.rows[2].label == "clean-mag/noisy-phase");
  CHECK(study.rows[3].label == "clean-mag/clean-phase");

  const auto& base = study.rows[0].mean;
  const auto& phase_fix = study.rows[1].mean;
  const auto& mag_fix = study.rows[2].mean;
  const auto& ideal = study.rows[3].mean;

  // Restoring the phase moves the waveform metric, not the envelope ones.
  CHECK(phase_fix.si_sdr_db > base.si_sdr_db + 5.0);
  // Restoring the magnitude moves the envelope metrics strongly.
  CHECK(mag_fix.cd < 0.6 * base.cd);
  CHECK(mag_fix.llr < 0.6 * base.llr);
  // The magnitude-only fix barely moves the phase-sensitive metric.
  CHECK(std::abs(mag_fix.si_sdr_db - base.si_sdr_db) < 5.0);
  // Both planes restored beats everything.
  CHECK(ideal.si_sdr_db > phase_fix.si_sdr_db);
  CHECK(ideal.cd < mag_fix.cd + 1e-9);
}

TEST_CASE("swap study table formatting") {
  const auto corpus = small_corpus(1);
  const auto study = run_swap_study(corpus, StftConfig{});
  const auto table = swap_study_table(study);
  CHECK(table.title.find("1 utterance") != std::string::npos);
  REQUIRE(table.columns.size() == 4);
  CHECK(table.columns[0] == "variant");
  CHECK(table.columns[3] == "SI-SDR (dB)");
  REQUIRE(table.rows.size() == 4);
  CHECK(table.rows[3][0] == "clean-mag/clean-phase");
}

TEST_CASE("swap study rejects an empty corpus") {
  CHECK_THROWS_AS(run_swap_study(std::vector<ExampleTriple>{}, StftConfig{}),
                  InvalidInput);
}
