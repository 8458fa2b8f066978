// losses/losses.cpp

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

#include "msda/losses/losses.hpp"

#include <cmath>

namespace msda::losses {

using autodiff::Tensor;

Tensor contrastive_loss(const Tensor& context_proj, const Tensor& quantized,
                        const std::vector<int>& masked,
                        const std::vector<std::vector<int>>& distractors,
                        double kappa) {
  if (context_proj.rank() != 2 || quantized.rank() != 2 ||
      context_proj.shape() != quantized.shape()) {
    throw ShapeError("contrastive_loss: context " +
                     autodiff::shape_str(context_proj.shape()) +
                     " and quantized " +
                     autodiff::shape_str(quantized.shape()) +
                     " must be equal rank-2 shapes");
  }
  if (masked.size() != distractors.size()) {
    throw ValueError("contrastive_loss: one distractor set per masked frame");
  }
  if (masked.empty()) throw ValueError("contrastive_loss: no masked frames");
  if (!(kappa > 0.0)) {
    throw ValueError("contrastive_loss: temperature must be positive");
  }
  const int rows = context_proj.dim(0);
  std::vector<Tensor> terms;
  terms.reserve(masked.size());
  for (std::size_t i = 0; i < masked.size(); ++i) {
    const int t = masked[i];
    if (t < 0 || t >= rows) {
      throw ShapeError("contrastive_loss: masked frame " + std::to_string(t) +
                       " out of range");
    }
    std::vector<int> cand;
    cand.reserve(1 + distractors[i].size());
    cand.push_back(t);
    for (int d : distractors[i]) cand.push_back(d);
    const std::vector<int> anchor_idx(cand.size(), t);
    Tensor anchors = autodiff::gather_rows(context_proj, anchor_idx);
    Tensor cands = autodiff::gather_rows(quantized, cand);
    Tensor sims = autodiff::scale(autodiff::cosine_rows(anchors, cands),
                                  1.0 / kappa);
    terms.push_back(autodiff::sub(autodiff::logsumexp(sims),
                                  autodiff::at_index(sims, 0)));
  }
  return autodiff::scale(autodiff::add_n(terms),
                         1.0 / static_cast<double>(terms.size()));
}

Tensor diversity_loss(const Tensor& codebook_probs) {
  if (codebook_probs.rank() != 2) {
    throw ShapeError("diversity_loss: expected [groups x entries], got " +
                     autodiff::shape_str(codebook_probs.shape()));
  }
  const int G = codebook_probs.dim(0);
  const int V = codebook_probs.dim(1);
  auto pv = codebook_probs.value();
  for (int g = 0; g < G; ++g) {
    double s = 0.0;
    for (int v = 0; v < V; ++v) {
      const double p = pv[static_cast<std::size_t>(g) * V + v];
      if (!(p >= 0.0)) {
        throw ValueError("diversity_loss: negative or NaN probability");
      }
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-6) {
      throw ValueError("diversity_loss: group " + std::to_string(g) +
                       " probabilities sum to " + std::to_string(s));
    }
  }
  Tensor entropy =
      autodiff::scale(autodiff::sum_axis(autodiff::xlogx(codebook_probs), 1),
                      -1.0);
  Tensor perplexity_sum = autodiff::sum(autodiff::exp(entropy));
  return autodiff::sub(autodiff::scalar(1.0),
                       autodiff::scale(perplexity_sum,
                                       1.0 / static_cast<double>(G * V)));
}

LossBundle compose_bundle(std::map<std::string, Tensor> terms,
                          std::map<std::string, double> coefficients) {
  if (terms.empty()) throw ValueError("compose_bundle: no terms");
  for (const auto& [name, t] : terms) {
    if (!t.defined() || t.numel() != 1) {
      throw ShapeError("compose_bundle: term '" + name + "' must be scalar");
    }
    if (!coefficients.count(name)) {
      throw ValueError("compose_bundle: missing coefficient for '" + name +
                       "'");
    }
  }
  if (coefficients.size() != terms.size()) {
    throw ValueError("compose_bundle: coefficient without a matching term");
  }
  std::vector<Tensor> weighted;
  weighted.reserve(terms.size());
  for (const auto& [name, t] : terms) {
    weighted.push_back(autodiff::scale(t, coefficients.at(name)));
  }
  LossBundle bundle;
  bundle.total = weighted.size() == 1 ? weighted[0] : autodiff::add_n(weighted);
  bundle.terms = std::move(terms);
  bundle.coefficients = std::move(coefficients);
  return bundle;
}

Tensor ssl_term(const Tensor& contrastive, const Tensor& diversity,
                double diversity_weight, bool include_diversity) {
  if (!include_diversity) return contrastive;
  return autodiff::add(contrastive,
                       autodiff::scale(diversity, diversity_weight));
}

LossBundle mixed_ssl_objective(const Tensor& ctc_source,
                               const Tensor& ssl_source,
                               const Tensor& ssl_target, double alpha,
                               double beta) {
  return compose_bundle(
      {{"ctc_source", ctc_source},
       {"ssl_source", ssl_source},
       {"ssl_target", ssl_target}},
      {{"ctc_source", 1.0}, {"ssl_source", alpha}, {"ssl_target", beta}});
}

LossBundle teacher_objective(const Tensor& ctc_target_pseudo,
                             double feedback_h, const Tensor& ctc_source,
                             double gamma, const Tensor& diversity_target,
                             double delta) {
  return compose_bundle({{"feedback", ctc_target_pseudo},
                         {"ctc_source", ctc_source},
                         {"diversity_target", diversity_target}},
                        {{"feedback", feedback_h},
                         {"ctc_source", gamma},
                         {"diversity_target", delta}});
}

LossBundle teacher_ssl_objective(const Tensor& ctc_target_pseudo,
                                 double feedback_h, const Tensor& ssl_source,
                                 const Tensor& ssl_target) {
  return compose_bundle({{"feedback", ctc_target_pseudo},
                         {"ssl_source", ssl_source},
                         {"ssl_target", ssl_target}},
                        {{"feedback", feedback_h},
                         {"ssl_source", 1.0},
                         {"ssl_target", 1.0}});
}

LossBundle student_ssl_objective(const Tensor& ctc_pseudo,
                                 const Tensor& ssl_target) {
  return compose_bundle(
      {{"ctc_pseudo", ctc_pseudo}, {"ssl_target", ssl_target}},
      {{"ctc_pseudo", 1.0}, {"ssl_target", 1.0}});
}

LossBundle ctc_objective(const Tensor& ctc) {
  return compose_bundle({{"ctc_source", ctc}}, {{"ctc_source", 1.0}});
}

LossBundle ssl_objective(const Tensor& ssl) {
  return compose_bundle({{"ssl_target", ssl}}, {{"ssl_target", 1.0}});
}

}  // namespace msda::losses
