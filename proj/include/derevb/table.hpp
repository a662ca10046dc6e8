// derevb/table.hpp

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

#ifndef DEREVB_TABLE_HPP
#define DEREVB_TABLE_HPP

#include <string>
#include <vector>

namespace derevb {

// Small result table emitted both as aligned text and as CSV.
struct Table {
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> cells);
};

std::string fmt_fixed(double v, int precision);

std::string format_text(const Table& t);
std::string format_csv(const Table& t);

// Writes <dir>/<stem>.txt and <dir>/<stem>.csv.
void write_table(const Table& t, const std::string& dir,
                 const std::string& stem);

}  // namespace derevb

#endif  // DEREVB_TABLE_HPP
