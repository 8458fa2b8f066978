// msda/eval/wer.hpp

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

#pragma once

#include <span>

namespace msda::eval {

struct EditCounts {
  int substitutions = 0;
  int deletions = 0;
  int insertions = 0;
  int total() const { return substitutions + deletions + insertions; }
};

// Minimum-edit alignment of hypothesis against reference. Among minimum-cost
// alignments the one with the most substitutions is chosen, which makes the
// split canonical: swapping arguments exchanges deletions and insertions.
EditCounts wer_align(std::span<const int> reference,
                     std::span<const int> hypothesis);

// (S + D + I) / |reference| as a fraction; reference must be nonempty.
double wer(std::span<const int> reference, std::span<const int> hypothesis);

}  // namespace msda::eval
