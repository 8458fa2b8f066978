// eval/report.cpp

// Copyright 2026  MSDA Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "msda/eval/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

namespace msda::eval {

namespace {

struct Cell {
  double sum = 0.0;
  int n = 0;
};

std::string fmt_cell(const Cell& c) {
  if (c.n == 0) return "";
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.2f (n=%d)", c.sum / c.n, c.n);
  return buf;
}

}  // namespace

std::string render_grid(const std::vector<pipeline::RunRecord>& records,
                        bool markdown) {
  std::vector<std::string> methods;
  std::vector<std::string> settings;
  std::map<std::pair<std::string, std::string>, Cell> cells;
  for (const auto& r : records) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
      methods.push_back(r.method);
    if (std::find(settings.begin(), settings.end(), r.setting) == settings.end())
      settings.push_back(r.setting);
    auto& c = cells[{r.method, r.setting}];
    c.sum += r.wer_target_test;
    ++c.n;
  }

  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> head;
  head.push_back("method \\ setting");
  for (const auto& s : settings) head.push_back(s);
  grid.push_back(head);
  for (const auto& m : methods) {
    std::vector<std::string> row;
    row.push_back(m);
    for (const auto& s : settings) {
      auto it = cells.find({m, s});
      row.push_back(it == cells.end() ? "" : fmt_cell(it->second));
    }
    grid.push_back(row);
  }

  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& row : grid)
    for (std::size_t i = 0; i < row.size(); ++i)
      width[i] = std::max(width[i], row[i].size());

  std::ostringstream os;
  auto emit_row = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (markdown) {
        os << "| " << row[i] << std::string(width[i] - row[i].size(), ' ') << ' ';
      } else {
        os << row[i] << std::string(width[i] - row[i].size(), ' ');
        if (i + 1 < row.size()) os << "  ";
      }
    }
    if (markdown) os << "|";
    os << '\n';
  };
  emit_row(grid[0]);
  if (markdown) {
    for (std::size_t i = 0; i < width.size(); ++i)
      os << "|" << std::string(width[i] + 2, '-');
    os << "|\n";
  }
  for (std::size_t r = 1; r < grid.size(); ++r) emit_row(grid[r]);
  return os.str();
}

}  // namespace msda::eval
