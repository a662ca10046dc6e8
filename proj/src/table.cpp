// derevb/table.cpp

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

#include "derevb/table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "derevb/errors.hpp"

namespace derevb {

void Table::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns.size())
    throw ShapeError("table: row width " + std::to_string(cells.size()) +
                     " != column count " + std::to_string(columns.size()));
  rows.push_back(std::move(cells));
}

std::string fmt_fixed(double v, int precision) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

std::string format_text(const Table& t) {
  std::vector<std::size_t> width(t.columns.size());
  for (std::size_t c = 0; c < t.columns.size(); ++c)
    width[c] = t.columns[c].size();
  for (const auto& row : t.rows)
    for (std::size_t c = 0; c < row.size(); ++c)
      width[c] = std::max(width[c], row[c].size());

  std::ostringstream out;
  if (!t.title.empty()) out << t.title << "\n";
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) out << "  ";
      // first column left-aligned (labels), the rest right-aligned (numbers)
      const auto pad = width[c] - cells[c].size();
      if (c == 0) {
        out << cells[c] << std::string(pad, ' ');
      } else {
        out << std::string(pad, ' ') << cells[c];
      }
    }
    out << "\n";
  };
  emit(t.columns);
  std::size_t total = 0;
  for (std::size_t c = 0; c < width.size(); ++c)
    total += width[c] + (c ? 2 : 0);
  out << std::string(total, '-') << "\n";
  for (const auto& row : t.rows) emit(row);
  return out.str();
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

}  // namespace

std::string format_csv(const Table& t) {
  std::ostringstream out;
  for (std::size_t c = 0; c < t.columns.size(); ++c)
    out << (c ? "," : "") << csv_escape(t.columns[c]);
  out << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c)
      out << (c ? "," : "") << csv_escape(row[c]);
    out << "\n";
  }
  return out.str();
}

void write_table(const Table& t, const std::string& dir,
                 const std::string& stem) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (const char* ext : {".txt", ".csv"}) {
    const fs::path path = fs::path(dir) / (stem + ext);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("table: cannot write " + path.string());
    out << (ext[1] == 't' ? format_text(t) : format_csv(t));
  }
}

}  // namespace derevb
