// derevb/cli.hpp

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

#ifndef DEREVB_CLI_HPP
#define DEREVB_CLI_HPP

#include <string>
#include <vector>

#include "derevb/models.hpp"
#include "derevb/stft.hpp"
#include "derevb/training.hpp"

namespace derevb {

// Shared JSON config consumed by `train` and `ablate`.  Versioned schema;
// unknown keys are rejected so typos fail fast instead of silently running
// with defaults.
struct CliConfig {
  StftConfig stft;
  UNetConfig s2s = desk_s2s_config();
  UNetConfig ri2ri = desk_ri2ri_config();
  TrainingConfig training;
  bool has_model_section = false;  // explicit in the file (vs defaults)
  bool has_stft_section = false;
};

CliConfig default_cli_config();
CliConfig load_cli_config(const std::string& path);

// Full argv-style entry point.  Never throws: failures print one
// machine-readable JSON object to stderr and return a nonzero code.
int run_cli(int argc, const char* const* argv);

// Convenience for tests: args without the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace derevb

#endif  // DEREVB_CLI_HPP
