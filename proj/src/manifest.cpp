// derevb/manifest.cpp

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

#include "derevb/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "derevb/errors.hpp"

namespace derevb {

using nlohmann::json;

MixtureSpec ManifestEntry::to_spec() const {
  MixtureSpec spec;
  spec.rt60_s = rt60_s;
  spec.snr_db = snr_db;
  spec.noise_kind = noise_kind;
  spec.noise_path = noise_path;
  spec.seed = seed;
  spec.validate();
  return spec;
}

std::string noise_kind_name(NoiseKind kind, const std::string& path) {
  switch (kind) {
    case NoiseKind::kWhite:
      return "white";
    case NoiseKind::kPink:
      return "pink";
    case NoiseKind::kNone:
      return "none";
    case NoiseKind::kRecorded:
      return "recorded:" + path;
  }
  throw InvalidInput("noise_kind_name: bad kind");
}

NoiseKind parse_noise_kind(const std::string& name, std::string* path_out) {
  if (path_out) path_out->clear();
  if (name == "white") return NoiseKind::kWhite;
  if (name == "pink") return NoiseKind::kPink;
  if (name == "none") return NoiseKind::kNone;
  if (name.rfind("recorded:", 0) == 0) {
    const std::string path = name.substr(9);
    if (path.empty())
      throw InvalidInput("noise_kind: recorded noise requires a path");
    if (path_out) *path_out = path;
    return NoiseKind::kRecorded;
  }
  throw InvalidInput("noise_kind: unknown kind '" + name + "'");
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("manifest: cannot open " + path);
  static const std::set<std::string> kKeys = {"id",     "clean_path",
                                              "rt60_s", "snr_db",
                                              "noise_kind", "seed"};
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InvalidInput("manifest: " + path + ":" +
                         std::to_string(line_no) + ": " + e.what());
    }
    const std::string where =
        "manifest: " + path + ":" + std::to_string(line_no);
    if (!j.is_object()) throw InvalidInput(where + ": expected an object");
    for (const auto& [key, _] : j.items())
      if (!kKeys.count(key))
        throw InvalidInput(where + ": unknown key '" + key + "'");
    for (const auto& key : kKeys)
      if (!j.contains(key))
        throw InvalidInput(where + ": missing key '" + key + "'");
    try {
      ManifestEntry e;
      e.id = j.at("id").get<std::string>();
      e.clean_path = j.at("clean_path").get<std::string>();
      e.rt60_s = j.at("rt60_s").get<double>();
      e.snr_db = j.at("snr_db").get<double>();
      e.noise_kind =
          parse_noise_kind(j.at("noise_kind").get<std::string>(), &e.noise_path);
      e.seed = j.at("seed").get<uint64_t>();
      entries.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw InvalidInput(where + ": " + ex.what());
    }
  }
  // Paths inside the file stay relative (the manifest is relocatable); the
  // loaded entries resolve against the manifest's own directory.
  const auto base = std::filesystem::path(path).parent_path();
  for (auto& e : entries) {
    if (!e.clean_path.empty() &&
        std::filesystem::path(e.clean_path).is_relative())
      e.clean_path = (base / e.clean_path).string();
    if (!e.noise_path.empty() &&
        std::filesystem::path(e.noise_path).is_relative())
      e.noise_path = (base / e.noise_path).string();
  }
  return entries;
}

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::binary);  // binary: stable newlines
  if (!out) throw InvalidInput("manifest: cannot write " + path);
  for (const auto& e : entries) {
    json j;
    j["id"] = e.id;
    j["clean_path"] = e.clean_path;
    j["rt60_s"] = e.rt60_s;
    j["snr_db"] = e.snr_db;
    j["noise_kind"] = noise_kind_name(e.noise_kind, e.noise_path);
    j["seed"] = e.seed;
    out << j.dump() << "\n";
  }
  if (!out) throw InvalidInput("manifest: write failed for " + path);
}

ExampleTriple load_example(const ManifestEntry& entry) {
  const Waveform clean = read_wav(entry.clean_path);
  return make_example(clean, entry.to_spec());
}

}  // namespace derevb
