// tests/test_manifest.cpp

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

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "derevb/errors.hpp"
#include "derevb/manifest.hpp"
#include "derevb/signal_model.hpp"
#include "derevb/waveform.hpp"
#include "doctest.h"

namespace {

using namespace derevb;
namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("derevb_manifest_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_lines(const fs::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p, std::ios::binary);
  for (const auto& l : lines) out << l << "\n";
}

void expect_reject(const fs::path& p, const char* needle) {
  try {
    read_manifest(p.string());
    FAIL("expected InvalidInput mentioning " << needle);
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find(needle) != std::string::npos);
  }
}

}  // namespace

TEST_CASE("noise kinds have stable names") {
  CHECK(noise_kind_name(NoiseKind::kWhite) == "white");
  CHECK(noise_kind_name(NoiseKind::kPink) == "pink");
  CHECK(noise_kind_name(NoiseKind::kNone) == "none");
  CHECK(noise_kind_name(NoiseKind::kRecorded, "/x/hum.wav") ==
        "recorded:/x/hum.wav");

  std::string path = "stale";
  CHECK(parse_noise_kind("white", &path) == NoiseKind::kWhite);
  CHECK(path.empty());
  CHECK(parse_noise_kind("pink", &path) == NoiseKind::kPink);
  CHECK(parse_noise_kind("none", &path) == NoiseKind::kNone);
  CHECK(parse_noise_kind("recorded:/x/hum.wav", &path) ==
        NoiseKind::kRecorded);
  CHECK(path == "/x/hum.wav");
  CHECK(parse_noise_kind("white", nullptr) == NoiseKind::kWhite);

  CHECK_THROWS_AS(parse_noise_kind("brown", &path), InvalidInput);
  CHECK_THROWS_AS(parse_noise_kind("recorded:", &path), InvalidInput);
}

TEST_CASE("manifest round trips") {
  std::vector<ManifestEntry> entries(3);
  entries[0].id = "utt_000";
  entries[0].clean_path = "/abs/utt_000.wav";
  entries[0].rt60_s = 0.4;
  entries[0].snr_db = 15.0;
  entries[0].noise_kind = NoiseKind::kPink;
  entries[0].seed = 7;
  entries[1].id = "utt_001";
  entries[1].clean_path = "/abs/utt_001.wav";
  entries[1].rt60_s = 0.0;
  entries[1].snr_db = 5.5;
  entries[1].noise_kind = NoiseKind::kNone;
  entries[1].seed = 8;
  entries[2].id = "utt_002";
  entries[2].clean_path = "/abs/utt_002.wav";
  entries[2].rt60_s = 1.2;
  entries[2].snr_db = 0.0;
  entries[2].noise_kind = NoiseKind::kRecorded;
  entries[2].noise_path = "/abs/hum.wav";
  entries[2].seed = 9;

  const fs::path dir = temp_dir("roundtrip");
  const std::string path = (dir / "data.jsonl").string();
  write_manifest(path, entries);
  const auto back = read_manifest(path);
  REQUIRE(back.size() == entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    CHECK(back[i].id == entries[i].id);
    CHECK(back[i].clean_path == entries[i].clean_path);
    CHECK(back[i].rt60_s == entries[i].rt60_s);
    CHECK(back[i].snr_db == entries[i].snr_db);
    CHECK(back[i].noise_kind == entries[i].noise_kind);
    CHECK(back[i].noise_path == entries[i].noise_path);
    CHECK(back[i].seed == entries[i].seed);
  }

  CHECK_THROWS_AS(write_manifest("/nonexistent_dir_zz/data.jsonl", entries),
                  InvalidInput);
}

TEST_CASE("relative paths resolve against the manifest directory") {
  const fs::path dir = temp_dir("relpaths");
  const fs::path manifest = dir / "data.jsonl";
  write_lines(
      manifest,
      {R"({"id":"a","clean_path":"wavs/a.wav","rt60_s":0.5,"snr_db":20.0,)"
       R"("noise_kind":"recorded:noise/hum.wav","seed":1})",
       R"({"id":"b","clean_path":"/abs/b.wav","rt60_s":0.5,"snr_db":20.0,)"
       R"("noise_kind":"white","seed":2})"});

  const auto entries = read_manifest(manifest.string());
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].clean_path == (dir / "wavs/a.wav").string());
  CHECK(entries[0].noise_path == (dir / "noise/hum.wav").string());
  CHECK(entries[1].clean_path == "/abs/b.wav");
  CHECK(entries[1].noise_path.empty());
}

TEST_CASE("schema violations are rejected with the offending line") {
  const fs::path dir = temp_dir("schema");
  const fs::path p = dir / "bad.jsonl";
  const std::string good =
      R"({"id":"a","clean_path":"a.wav","rt60_s":0.5,"snr_db":20.0,)"
      R"("noise_kind":"white","seed":1})";

  write_lines(p, {good, "not json"});
  expect_reject(p, ":2");

  write_lines(p, {"[1, 2, 3]"});
  expect_reject(p, "expected an object");

  write_lines(
      p, {R"({"id":"a","clean_path":"a.wav","rt60_s":0.5,"snr_db":20.0,)"
          R"("noise_kind":"white","seed":1,"extra":true})"});
  expect_reject(p, "unknown key 'extra'");

  write_lines(p,
              {R"({"id":"a","clean_path":"a.wav","rt60_s":0.5,"snr_db":20.0,)"
               R"("noise_kind":"white"})"});
  expect_reject(p, "missing key 'seed'");

  write_lines(p, {R"({"id":7,"clean_path":"a.wav","rt60_s":0.5,)"
                  R"("snr_db":20.0,"noise_kind":"white","seed":1})"});
  expect_reject(p, ":1");

  write_lines(p,
              {R"({"id":"a","clean_path":"a.wav","rt60_s":0.5,"snr_db":20.0,)"
               R"("noise_kind":"brown","seed":1})"});
  expect_reject(p, "unknown kind 'brown'");

  expect_reject(dir / "missing.jsonl", "cannot open");

  // Blank lines are tolerated.
  write_lines(p, {good, "", good});
  CHECK(read_manifest(p.string()).size() == 2);
}

TEST_CASE("entries regenerate their mixtures deterministically") {
  const fs::path dir = temp_dir("loadex");
  const Waveform clean = make_pseudo_speech(0.2, 8000, 3);
  write_wav((dir / "utt.wav").string(), clean);

  ManifestEntry e;
  e.id = "utt";
  e.clean_path = "utt.wav";
  e.rt60_s = 0.3;
  e.snr_db = 10.0;
  e.noise_kind = NoiseKind::kWhite;
  e.seed = 5;
  write_manifest((dir / "data.jsonl").string(), {e});

  const auto entries = read_manifest((dir / "data.jsonl").string());
  REQUIRE(entries.size() == 1);
  const ExampleTriple a = load_example(entries[0]);
  const ExampleTriple b = load_example(entries[0]);
  CHECK(a.noisy.samples == b.noisy.samples);
  CHECK(a.clean.size() == a.noisy.size());
  CHECK(a.clean.sample_rate_hz == 8000);

  // The loaded example is exactly what make_example produces by hand.
  const ExampleTriple direct =
      make_example(read_wav(entries[0].clean_path), entries[0].to_spec());
  CHECK(a.noisy.samples == direct.noisy.samples);
  CHECK(a.reverberant.samples == direct.reverberant.samples);

  // to_spec validates the numbers it forwards.
  ManifestEntry bad = entries[0];
  bad.rt60_s = 9.0;
  CHECK_THROWS_AS(bad.to_spec(), InvalidInput);
}
