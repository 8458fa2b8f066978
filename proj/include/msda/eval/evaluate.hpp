// msda/eval/evaluate.hpp

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

#include <string>
#include <vector>

#include "msda/data/data.hpp"
#include "msda/eval/wer.hpp"
#include "msda/model/model.hpp"

namespace msda::eval {

struct UttResult {
  std::string id;
  std::string reference;
  std::string hypothesis;
  EditCounts edits;
  int reference_tokens = 0;
};

struct EvalReport {
  std::vector<UttResult> rows;
  long reference_tokens = 0;
  long substitutions = 0;
  long deletions = 0;
  long insertions = 0;
  double wer_fraction = 0.0;  // (S+D+I) / reference tokens
};

// Greedy-decodes every utterance with a clean forward pass (no masking, no
// augmentation) and scores corpus-level word error rate.
EvalReport evaluate_corpus(const model::Params& params,
                           const std::vector<const data::Utterance*>& utts,
                           const std::vector<std::string>& vocab);

}  // namespace msda::eval
