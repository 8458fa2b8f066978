// msda/losses/ctc.hpp

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
#include <vector>

#include "msda/autodiff/tensor.hpp"

namespace msda::losses {

// Frames a label sequence needs under the repeat-collapsing alignment:
// its length plus one separator frame per adjacent repeated pair.
int ctc_min_frames(std::span<const int> targets);

// Negative log-likelihood of `targets` under per-frame label distributions
// log_probs [T x V], marginalized over all alignments (log-space forward
// recursion over the blank-interleaved label sequence). Not normalized by
// target length. Targets must avoid the blank index; throws AlignmentError
// when T is too short for the sequence.
autodiff::Tensor ctc_loss(const autodiff::Tensor& log_probs,
                          std::span<const int> targets, int blank = 0);

// Same value without building a graph; log_probs is row-major [T x V].
double ctc_loss_value(std::span<const double> log_probs, int T, int V,
                      std::span<const int> targets, int blank = 0);

}  // namespace msda::losses
