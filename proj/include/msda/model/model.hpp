// msda/model/model.hpp

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
#include <span>
#include <string>
#include <vector>

#include "msda/augment/specaugment.hpp"
#include "msda/autodiff/ops.hpp"
#include "msda/autodiff/tensor.hpp"
#include "msda/rng.hpp"

namespace msda::model {

// Sequence encoder for CTC with a quantized self-supervised branch:
// strided convolutional feature encoder, product-quantizer codebooks with
// Gumbel assignment, span masking with a learned mask embedding, and a
// pre-norm transformer context network feeding a CTC head plus a projection
// used for the contrastive task.
struct ModelConfig {
  int input_channels = 16;
  int encoder_dim = 64;
  int conv_kernel = 3;
  int downsample_factor = 2;  // stride of the first conv layer
  int context_layers = 2;
  int attention_heads = 4;
  int ffn_dim = 128;
  int codebook_groups = 2;    // G
  int codebook_entries = 32;  // V per group
  int codevector_dim = 32;    // quantized / projected vector width
  int vocab_size = 21;        // labels incl. blank at index 0
  double mask_prob = 0.5;
  int mask_span = 2;
  int num_distractors = 10;
  double contrastive_temp = 0.1;
  double gumbel_temp_start = 2.0;
  double gumbel_temp_end = 0.5;
  double gumbel_temp_decay = 0.999;  // multiplicative per step
  bool gumbel_hard = true;
  double diversity_weight = 0.1;
  bool ssl_include_diversity = true;
  std::string position_encoding = "sinusoidal";  // or "none"
  double layer_norm_eps = 1e-5;

  void validate() const;
  int frames_out(int frames_in) const;  // ceil(frames_in / downsample_factor)
};

// Annealed assignment temperature: start * decay^step, floored at end.
double gumbel_temperature(const ModelConfig& cfg, long step);

struct Params {
  ModelConfig config;
  // Name-keyed leaves, all requiring gradients.
  std::map<std::string, autodiff::Tensor> tensors;

  Params clone() const;
  void zero_grads() const;
  std::size_t parameter_count() const;
};

Params init_params(const ModelConfig& cfg, const Rng& rng);

struct ForwardOptions {
  bool apply_masking = false;
  bool compute_quantized = false;
  double gumbel_temperature = 1.0;
  // When set, features are augmented before entering the encoder.
  const augment::SpecAugmentConfig* specaugment = nullptr;
};

struct UttForward {
  int frames_out = 0;
  autodiff::Tensor ctc_log_probs;   // [T' x vocab]
  autodiff::Tensor context_proj;    // [T' x codevector_dim], quantized branch
  autodiff::Tensor quantized;       // [T' x codevector_dim]
  autodiff::Tensor codebook_probs;  // [G x V], mean over frames (no noise)
  std::vector<int> masked;          // sorted masked frame indices
};

// One utterance forward. Randomness (augment masks, span placement, Gumbel
// noise) comes from streams derived off `rng`, one purpose each, so the same
// (rng identity, options) pair replays exactly.
UttForward forward_utterance(const Params& params,
                             std::span<const double> features, int frames,
                             int channels, const ForwardOptions& opts,
                             const Rng& rng);

// Masked span starts: max(1, round(mask_prob * frames / span)) spans when
// mask_prob > 0, placed without replacement over valid start positions;
// spans may overlap and are clipped at the sequence end.
std::vector<int> sample_mask_indices(int frames, double mask_prob, int span,
                                     Rng& rng);

// For each masked position, k draws (with replacement) from the other masked
// positions of the same utterance. Requires at least two masked positions
// unless k is zero.
std::vector<std::vector<int>> sample_distractors(const std::vector<int>& masked,
                                                 int k, Rng& rng);

}  // namespace msda::model
