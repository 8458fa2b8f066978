// msda/losses/losses.hpp

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

#include <map>
#include <string>
#include <vector>

#include "msda/autodiff/ops.hpp"
#include "msda/autodiff/tensor.hpp"

namespace msda::losses {

// Masked-position contrastive loss. For each masked frame t the positive is
// quantized[t] and the negatives are quantized rows named by distractors[i];
// similarities are cosines divided by kappa, and the per-position loss is
// -log softmax of the positive. Mean over positions. An empty distractor set
// makes that position's loss exactly zero.
autodiff::Tensor contrastive_loss(const autodiff::Tensor& context_proj,
                                  const autodiff::Tensor& quantized,
                                  const std::vector<int>& masked,
                                  const std::vector<std::vector<int>>& distractors,
                                  double kappa);

// Codebook usage penalty 1 - (1/(G*V)) * sum_g exp(H(p_g)) over mean group
// distributions p [G x V]. Zero when every group is uniform; 1 - 1/V when
// every group collapses to one entry.
autodiff::Tensor diversity_loss(const autodiff::Tensor& codebook_probs);

// Weighted sum of named scalar terms. `terms` holds the raw scalars,
// `coefficients` the weights (same keys), and `total` their weighted sum,
// recomposable from the parts.
struct LossBundle {
  std::map<std::string, autodiff::Tensor> terms;
  std::map<std::string, double> coefficients;
  autodiff::Tensor total;
};

LossBundle compose_bundle(std::map<std::string, autodiff::Tensor> terms,
                          std::map<std::string, double> coefficients);

// Contrastive plus weighted diversity, the per-domain self-supervised term.
autodiff::Tensor ssl_term(const autodiff::Tensor& contrastive,
                          const autodiff::Tensor& diversity,
                          double diversity_weight, bool include_diversity);

// Supervised CTC on source plus self-supervision on both domains.
LossBundle mixed_ssl_objective(const autodiff::Tensor& ctc_source,
                               const autodiff::Tensor& ssl_source,
                               const autodiff::Tensor& ssl_target, double alpha,
                               double beta);

// Teacher update: feedback-weighted CTC on its own pseudo-labels, anchored
// by supervised CTC on source and codebook diversity on target.
LossBundle teacher_objective(const autodiff::Tensor& ctc_target_pseudo,
                             double feedback_h,
                             const autodiff::Tensor& ctc_source, double gamma,
                             const autodiff::Tensor& diversity_target,
                             double delta);

// Teacher ablation: the anchors replaced by self-supervision on both domains.
LossBundle teacher_ssl_objective(const autodiff::Tensor& ctc_target_pseudo,
                                 double feedback_h,
                                 const autodiff::Tensor& ssl_source,
                                 const autodiff::Tensor& ssl_target);

// Student ablation: pseudo-label CTC plus self-supervision on target.
LossBundle student_ssl_objective(const autodiff::Tensor& ctc_pseudo,
                                 const autodiff::Tensor& ssl_target);

// Plain supervised CTC (fine-tuning, and the standard student update).
LossBundle ctc_objective(const autodiff::Tensor& ctc);

// Self-supervision only (continued pretraining).
LossBundle ssl_objective(const autodiff::Tensor& ssl);

}  // namespace msda::losses
