// augment/specaugment.cpp

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

#include "msda/augment/specaugment.hpp"

#include <algorithm>

#include "msda/error.hpp"

namespace msda::augment {

std::vector<double> spec_augment(std::span<const double> features, int frames,
                                 int channels, const SpecAugmentConfig& cfg,
                                 Rng& rng) {
  if (frames < 1 || channels < 1 ||
      static_cast<std::size_t>(frames) * channels != features.size()) {
    throw ValueError("spec_augment: bad feature dimensions");
  }
  if (cfg.time_masks < 0 || cfg.channel_masks < 0 || cfg.time_mask_max < 0 ||
      cfg.channel_mask_max < 0) {
    throw ValueError("spec_augment: negative mask parameters");
  }
  std::vector<double> out(features.begin(), features.end());
  if (!cfg.enabled) return out;

  for (int m = 0; m < cfg.time_masks; ++m) {
    const int width = static_cast<int>(rng.uniform_below(
        static_cast<std::uint64_t>(std::min(cfg.time_mask_max, frames) + 1)));
    const int start = static_cast<int>(rng.uniform_below(
        static_cast<std::uint64_t>(frames - width + 1)));
    for (int t = start; t < start + width; ++t) {
      for (int c = 0; c < channels; ++c) {
        out[static_cast<std::size_t>(t) * channels + c] = cfg.mask_value;
      }
    }
  }
  for (int m = 0; m < cfg.channel_masks; ++m) {
    const int width = static_cast<int>(rng.uniform_below(
        static_cast<std::uint64_t>(std::min(cfg.channel_mask_max, channels) + 1)));
    const int start = static_cast<int>(rng.uniform_below(
        static_cast<std::uint64_t>(channels - width + 1)));
    for (int t = 0; t < frames; ++t) {
      for (int c = start; c < start + width; ++c) {
        out[static_cast<std::size_t>(t) * channels + c] = cfg.mask_value;
      }
    }
  }
  return out;
}

bool spec_augment_applies(PipelineStage stage, ModelRole role) {
  if (stage == PipelineStage::mixed_pretraining) return true;
  return role == ModelRole::student;
}

}  // namespace msda::augment
