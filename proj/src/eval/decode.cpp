// eval/decode.cpp

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

#include "msda/eval/decode.hpp"

#include "msda/error.hpp"

namespace msda::eval {

std::vector<int> greedy_decode(std::span<const double> log_probs, int T, int V,
                               int blank) {
  if (T < 1 || V < 2 ||
      static_cast<std::size_t>(T) * V != log_probs.size()) {
    throw ValueError("greedy_decode: bad dimensions");
  }
  if (blank < 0 || blank >= V) {
    throw ValueError("greedy_decode: blank outside vocabulary");
  }
  std::vector<int> out;
  int prev = -1;
  for (int t = 0; t < T; ++t) {
    const double* row = log_probs.data() + static_cast<std::size_t>(t) * V;
    int arg = 0;
    for (int k = 1; k < V; ++k) {
      if (row[k] > row[arg]) arg = k;
    }
    if (arg != prev && arg != blank) out.push_back(arg);
    prev = arg;
  }
  return out;
}

}  // namespace msda::eval
