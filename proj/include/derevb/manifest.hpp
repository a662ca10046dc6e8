// derevb/manifest.hpp

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

#ifndef DEREVB_MANIFEST_HPP
#define DEREVB_MANIFEST_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "derevb/signal_model.hpp"

namespace derevb {

// One dataset utterance.  A manifest line carries everything needed to
// regenerate the mixture deterministically: JSON with exactly the keys
// {id, clean_path, rt60_s, snr_db, noise_kind, seed}.  Recorded noise is
// encoded inside noise_kind as "recorded:<path>".
struct ManifestEntry {
  std::string id;
  std::string clean_path;
  double rt60_s = 0.5;
  double snr_db = 20.0;
  NoiseKind noise_kind = NoiseKind::kWhite;
  std::string noise_path;  // set iff noise_kind == kRecorded
  uint64_t seed = 0;

  MixtureSpec to_spec() const;
};

std::string noise_kind_name(NoiseKind kind, const std::string& path = "");
NoiseKind parse_noise_kind(const std::string& name, std::string* path_out);

std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries);

// Reads the clean WAV and synthesizes the reverberant/noisy pair.
ExampleTriple load_example(const ManifestEntry& entry);

}  // namespace derevb

#endif  // DEREVB_MANIFEST_HPP
