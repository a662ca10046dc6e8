// derevb/errors.hpp

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

#ifndef DEREVB_ERRORS_HPP
#define DEREVB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace derevb {

// Caller handed us something that violates an operation's precondition.
class InvalidInput : public std::runtime_error {
 public:
  explicit InvalidInput(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/matrix dimensions do not line up.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// A computation degenerated (NaN loss, vanishing normalizer, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Backward pass requested on a malformed or missing graph.
class GraphError : public std::runtime_error {
 public:
  explicit GraphError(const std::string& msg) : std::runtime_error(msg) {}
};

// Config/manifest schema violations; carries the offending field path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field_path, const std::string& msg)
      : std::runtime_error(field_path.empty() ? msg
                                              : field_path + ": " + msg),
        field(std::move(field_path)) {}
  std::string field;
};

}  // namespace derevb

#endif  // DEREVB_ERRORS_HPP
