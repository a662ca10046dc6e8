// derevb/checkpoint.hpp

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

// Checkpoint container: "DRVB" magic, little-endian uint32 header length,
// JSON header (version, configs, parameter names/shapes, config hash),
// then raw float32 little-endian parameter blobs in header order.
// Round trips are bit-exact.

#ifndef DEREVB_CHECKPOINT_HPP
#define DEREVB_CHECKPOINT_HPP

#include <string>

#include "json.hpp"

#include "derevb/models.hpp"

namespace derevb {

nlohmann::json stft_config_to_json(const StftConfig& cfg);
StftConfig stft_config_from_json(const nlohmann::json& j);

nlohmann::json unet_config_to_json(const UNetConfig& cfg);
UNetConfig unet_config_from_json(const nlohmann::json& j);

// FNV-1a hex digest of the canonical config serialization.
std::string config_hash(const nlohmann::json& j);

void save_bundle(const ModelBundle<float>& bundle, const std::string& path);
ModelBundle<float> load_bundle(const std::string& path);

}  // namespace derevb

#endif  // DEREVB_CHECKPOINT_HPP
