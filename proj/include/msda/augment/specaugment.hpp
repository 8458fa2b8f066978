// msda/augment/specaugment.hpp

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

#include "msda/rng.hpp"

namespace msda::augment {

struct SpecAugmentConfig {
  bool enabled = true;
  int time_masks = 2;
  int time_mask_max = 3;     // widths drawn uniformly from [0, max]
  int channel_masks = 2;
  int channel_mask_max = 4;
  double mask_value = 0.0;
};

// Zero out random time and channel bands of a [frames x channels] feature
// matrix. All draws come from `rng`, so a given (seed, utterance) pair always
// produces the same masks.
std::vector<double> spec_augment(std::span<const double> features, int frames,
                                 int channels, const SpecAugmentConfig& cfg,
                                 Rng& rng);

enum class PipelineStage { mixed_pretraining = 1, teacher_student = 2 };
enum class ModelRole { teacher, student };

// Where augmentation belongs: during the mixed pretraining stage every
// training forward sees it; during teacher-student training only the student
// does, because augmented teacher inputs degrade the pseudo-labels.
bool spec_augment_applies(PipelineStage stage, ModelRole role);

}  // namespace msda::augment
