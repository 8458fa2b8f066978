// msda/pipeline/optimizer.hpp

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

#include "msda/model/checkpoint.hpp"
#include "msda/model/model.hpp"

namespace msda::pipeline {

struct AdamWConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// Adam with decoupled weight decay. Every parameter is updated every step;
// a parameter whose gradient buffer is empty contributes a zero gradient,
// so decay and moment dynamics do not depend on which loss terms happened
// to touch it. A step with any non-finite gradient is skipped whole.
class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

  const AdamWConfig& config() const { return cfg_; }
  long steps_taken() const { return t_; }
  long steps_skipped() const { return skipped_; }

  // Returns false when the step was skipped because of non-finite gradients.
  bool step(model::Params& params);

  // Moments and counters, for checkpointing. Prefix distinguishes multiple
  // optimizers in one file.
  void serialize(model::BlobFile* blob, const std::string& prefix) const;
  void deserialize(const model::BlobFile& blob, const std::string& prefix,
                   const model::Params& params);

 private:
  AdamWConfig cfg_;
  long t_ = 0;
  long skipped_ = 0;
  std::map<std::string, std::vector<double>> m_;
  std::map<std::string, std::vector<double>> v_;
};

}  // namespace msda::pipeline
