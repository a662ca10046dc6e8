// derevb/checkpoint.cpp

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

#include "derevb/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "derevb/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are little-endian");

namespace derevb {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'D', 'R', 'V', 'B'};
constexpr int kVersion = 1;

json window_name(Window w) {
  return w == Window::kHamming ? "hamming" : "hann";
}

Window window_from_name(const std::string& s) {
  if (s == "hamming") return Window::kHamming;
  if (s == "hann") return Window::kHann;
  throw InvalidInput("checkpoint: unknown window '" + s + "'");
}

json activation_name(OutputActivation a) {
  return a == OutputActivation::kTanhGain ? "tanh_gain" : "linear";
}

OutputActivation activation_from_name(const std::string& s) {
  if (s == "tanh_gain") return OutputActivation::kTanhGain;
  if (s == "linear") return OutputActivation::kLinear;
  throw InvalidInput("checkpoint: unknown activation '" + s + "'");
}

void append_params(json& names, const std::vector<ad::Parameter<float>>& ps,
                   const std::string& prefix) {
  for (const auto& p : ps) {
    json e;
    e["name"] = prefix + p.name;
    e["shape"] = p.tensor->shape;
    names.push_back(e);
  }
}

}  // namespace

json stft_config_to_json(const StftConfig& cfg) {
  json j;
  j["frame_len"] = cfg.frame_len;
  j["hop_len"] = cfg.hop_len;
  j["window"] = window_name(cfg.window);
  j["n_bins"] = cfg.n_bins;
  return j;
}

StftConfig stft_config_from_json(const json& j) {
  StftConfig cfg;
  cfg.frame_len = j.at("frame_len").get<int>();
  cfg.hop_len = j.at("hop_len").get<int>();
  cfg.window = window_from_name(j.at("window").get<std::string>());
  cfg.n_bins = j.at("n_bins").get<int>();
  cfg.validate();
  return cfg;
}

json unet_config_to_json(const UNetConfig& cfg) {
  json j;
  j["depth"] = cfg.depth;
  j["base_channels"] = cfg.base_channels;
  j["kernel_f"] = cfg.kernel_f;
  j["kernel_t"] = cfg.kernel_t;
  j["use_self_attention"] = cfg.use_self_attention;
  j["in_channels"] = cfg.in_channels;
  j["out_channels"] = cfg.out_channels;
  j["output_activation"] = activation_name(cfg.output_activation);
  j["attn_dim"] = cfg.attn_dim;
  j["freq_size"] = cfg.freq_size;
  return j;
}

UNetConfig unet_config_from_json(const json& j) {
  UNetConfig cfg;
  cfg.depth = j.at("depth").get<int>();
  cfg.base_channels = j.at("base_channels").get<int>();
  cfg.kernel_f = j.at("kernel_f").get<int>();
  cfg.kernel_t = j.at("kernel_t").get<int>();
  cfg.use_self_attention = j.at("use_self_attention").get<bool>();
  cfg.in_channels = j.at("in_channels").get<int>();
  cfg.out_channels = j.at("out_channels").get<int>();
  cfg.output_activation =
      activation_from_name(j.at("output_activation").get<std::string>());
  cfg.attn_dim = j.at("attn_dim").get<int>();
  cfg.freq_size = j.at("freq_size").get<int>();
  cfg.validate();
  return cfg;
}

std::string config_hash(const json& j) {
  const std::string s = j.dump();
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

void save_bundle(const ModelBundle<float>& bundle, const std::string& path) {
  json cfg;
  cfg["stft"] = stft_config_to_json(bundle.stft_cfg);
  cfg["s2s"] = unet_config_to_json(bundle.s2s.config());
  cfg["ri2ri"] = unet_config_to_json(bundle.ri2ri.config());

  json header;
  header["version"] = kVersion;
  header["kind"] = "bundle";
  header["config"] = cfg;
  header["config_hash"] = config_hash(cfg);
  header["params"] = json::array();
  append_params(header["params"], bundle.s2s.parameters(), "s2s/");
  append_params(header["params"], bundle.ri2ri.parameters(), "ri2ri/");

  const std::string head = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("checkpoint: cannot write " + path);
  out.write(kMagic, 4);
  const auto len = static_cast<uint32_t>(head.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  auto write_blobs = [&](const std::vector<ad::Parameter<float>>& ps) {
    for (const auto& p : ps)
      out.write(reinterpret_cast<const char*>(p.tensor->value.data()),
                static_cast<std::streamsize>(p.tensor->value.size() *
                                             sizeof(float)));
  };
  write_blobs(bundle.s2s.parameters());
  write_blobs(bundle.ri2ri.parameters());
  if (!out) throw InvalidInput("checkpoint: write failed for " + path);
}

ModelBundle<float> load_bundle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("checkpoint: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw InvalidInput("checkpoint: bad magic in " + path);
  uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in) throw InvalidInput("checkpoint: truncated header in " + path);
  std::string head(len, '\0');
  in.read(head.data(), len);
  if (!in) throw InvalidInput("checkpoint: truncated header in " + path);

  json header;
  try {
    header = json::parse(head);
  } catch (const json::parse_error& e) {
    throw InvalidInput("checkpoint: invalid header JSON: " +
                       std::string(e.what()));
  }
  if (header.at("version").get<int>() != kVersion)
    throw InvalidInput("checkpoint: unsupported version");
  if (header.at("kind").get<std::string>() != "bundle")
    throw InvalidInput("checkpoint: expected a model bundle");
  const json& cfg = header.at("config");
  if (header.at("config_hash").get<std::string>() != config_hash(cfg))
    throw InvalidInput("checkpoint: config hash mismatch (corrupt header)");

  ModelBundle<float> bundle(unet_config_from_json(cfg.at("s2s")),
                            unet_config_from_json(cfg.at("ri2ri")),
                            stft_config_from_json(cfg.at("stft")),
                            /*seed=*/0);

  auto read_into = [&](std::vector<ad::Parameter<float>>& ps,
                       const std::string& prefix, std::size_t& idx) {
    const json& entries = header.at("params");
    for (auto& p : ps) {
      if (idx >= entries.size())
        throw InvalidInput("checkpoint: parameter list too short");
      const json& e = entries[idx++];
      if (e.at("name").get<std::string>() != prefix + p.name)
        throw InvalidInput("checkpoint: parameter order mismatch at " +
                           e.at("name").get<std::string>());
      const auto shape = e.at("shape").get<std::vector<std::size_t>>();
      if (shape != p.tensor->shape)
        throw InvalidInput("checkpoint: shape mismatch for " + p.name);
      in.read(reinterpret_cast<char*>(p.tensor->value.data()),
              static_cast<std::streamsize>(p.tensor->value.size() *
                                           sizeof(float)));
      if (!in) throw InvalidInput("checkpoint: truncated blob for " + p.name);
    }
  };
  std::size_t idx = 0;
  read_into(bundle.s2s.parameters(), "s2s/", idx);
  read_into(bundle.ri2ri.parameters(), "ri2ri/", idx);
  return bundle;
}

}  // namespace derevb
