// tests/test_table.cpp

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
#include <limits>
#include <string>
#include <vector>

#include "derevb/errors.hpp"
#include "derevb/table.hpp"
#include "doctest.h"

namespace {

using namespace derevb;
namespace fs = std::filesystem;

Table sample_table() {
  Table t;
  t.title = "demo";
  t.columns = {"variant", "cd", "si_sdr_db"};
  t.add_row({"noisy", "5.1250", "-3.20"});
  t.add_row({"two-stage", "1.0000", "9.00"});
  return t;
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : s) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

}  // namespace

TEST_CASE("fixed formatting") {
  CHECK(fmt_fixed(3.14159, 2) == "3.14");
  CHECK(fmt_fixed(3.14159, 4) == "3.1416");
  CHECK(fmt_fixed(-0.5, 2) == "-0.50");
  CHECK(fmt_fixed(0.0, 3) == "0.000");
  CHECK(fmt_fixed(2.0, 0) == "2");
  CHECK(fmt_fixed(std::numeric_limits<double>::quiet_NaN(), 2) == "nan");
}

TEST_CASE("rows must match the column count") {
  Table t;
  t.columns = {"a", "b"};
  CHECK_NOTHROW(t.add_row({"1", "2"}));
  CHECK_THROWS_AS(t.add_row({"1"}), ShapeError);
  CHECK_THROWS_AS(t.add_row({"1", "2", "3"}), ShapeError);
  CHECK(t.rows.size() == 1);
}

TEST_CASE("text format aligns columns") {
  const std::string text = format_text(sample_table());
  const auto lines = lines_of(text);
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] == "demo");
  // Width: variant -> 9 ("two-stage"), cd -> 6 ("5.1250"), si_sdr_db -> 9.
  CHECK(lines[1] == "variant        cd  si_sdr_db");
  CHECK(lines[2] == std::string(9 + 2 + 6 + 2 + 9, '-'));
  CHECK(lines[3] == "noisy      5.1250      -3.20");
  CHECK(lines[4] == "two-stage  1.0000       9.00");
  // Labels hug the left edge, numbers the right.
  for (std::size_t i = 1; i < lines.size(); ++i) {
    CHECK(lines[i].front() != ' ');
    CHECK(lines[i].back() != ' ');
  }
}

TEST_CASE("text format without a title") {
  Table t = sample_table();
  t.title.clear();
  const auto lines = lines_of(format_text(t));
  REQUIRE(lines.size() == 4);
  CHECK(lines[0].rfind("variant", 0) == 0);
}

TEST_CASE("csv escapes commas quotes and newlines") {
  Table t;
  t.columns = {"label", "value"};
  t.add_row({"plain", "1"});
  t.add_row({"with,comma", "2"});
  t.add_row({"with\"quote", "3"});
  t.add_row({"with\nnewline", "4"});
  const std::string csv = format_csv(t);
  CHECK(csv ==
        "label,value\n"
        "plain,1\n"
        "\"with,comma\",2\n"
        "\"with\"\"quote\",3\n"
        "\"with\nnewline\",4\n");
}

TEST_CASE("tables land on disk in both formats") {
  const fs::path dir = fs::temp_directory_path() / "derevb_table_out";
  fs::remove_all(dir);
  const Table t = sample_table();
  write_table(t, dir.string(), "report");

  std::ifstream txt(dir / "report.txt", std::ios::binary);
  REQUIRE(txt.good());
  std::string txt_body((std::istreambuf_iterator<char>(txt)),
                       std::istreambuf_iterator<char>());
  CHECK(txt_body == format_text(t));

  std::ifstream csv(dir / "report.csv", std::ios::binary);
  REQUIRE(csv.good());
  std::string csv_body((std::istreambuf_iterator<char>(csv)),
                       std::istreambuf_iterator<char>());
  CHECK(csv_body == format_csv(t));
}
