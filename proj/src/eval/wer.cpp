// eval/wer.cpp

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

#include "msda/eval/wer.hpp"

#include <vector>

#include "msda/error.hpp"

namespace msda::eval {
namespace {

// DP cell ordered by (cost ascending, substitutions descending).
struct Cell {
  int cost = 0;
  int subs = 0;
  bool better_than(const Cell& other) const {
    if (cost != other.cost) return cost < other.cost;
    return subs > other.subs;
  }
};

}  // namespace

EditCounts wer_align(std::span<const int> reference,
                     std::span<const int> hypothesis) {
  const std::size_t r = reference.size();
  const std::size_t h = hypothesis.size();
  std::vector<Cell> prev(h + 1);
  std::vector<Cell> cur(h + 1);
  for (std::size_t j = 0; j <= h; ++j) prev[j] = {static_cast<int>(j), 0};
  for (std::size_t i = 1; i <= r; ++i) {
    cur[0] = {static_cast<int>(i), 0};
    for (std::size_t j = 1; j <= h; ++j) {
      const bool match = reference[i - 1] == hypothesis[j - 1];
      Cell best = {prev[j - 1].cost + (match ? 0 : 1),
                   prev[j - 1].subs + (match ? 0 : 1)};
      const Cell del = {prev[j].cost + 1, prev[j].subs};
      const Cell ins = {cur[j - 1].cost + 1, cur[j - 1].subs};
      if (del.better_than(best)) best = del;
      if (ins.better_than(best)) best = ins;
      cur[j] = best;
    }
    std::swap(prev, cur);
  }
  const Cell final_cell = prev[h];
  // With cost and substitutions fixed, the deletion/insertion split is
  // determined by the length difference.
  const int di = final_cell.cost - final_cell.subs;
  const int len_diff = static_cast<int>(r) - static_cast<int>(h);
  EditCounts counts;
  counts.substitutions = final_cell.subs;
  counts.deletions = (di + len_diff) / 2;
  counts.insertions = (di - len_diff) / 2;
  return counts;
}

double wer(std::span<const int> reference, std::span<const int> hypothesis) {
  if (reference.empty()) throw ValueError("wer: empty reference");
  return static_cast<double>(wer_align(reference, hypothesis).total()) /
         static_cast<double>(reference.size());
}

}  // namespace msda::eval
