// pipeline/optimizer.cpp

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

#include "msda/pipeline/optimizer.hpp"

#include <cmath>
#include <cstdio>

#include "msda/error.hpp"

namespace msda::pipeline {

bool AdamW::step(model::Params& params) {
  for (const auto& [name, t] : params.tensors) {
    for (double g : t.grad()) {
      if (!std::isfinite(g)) {
        ++skipped_;
        std::fprintf(stderr,
                     "warning: non-finite gradient in '%s', skipping step %ld\n",
                     name.c_str(), t_ + 1);
        return false;
      }
    }
  }

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto& [name, t] : params.tensors) {
    auto& m = m_[name];
    auto& v = v_[name];
    if (m.empty()) m.assign(t.numel(), 0.0);
    if (v.empty()) v.assign(t.numel(), 0.0);
    if (m.size() != t.numel()) {
      throw CheckpointError("optimizer state size mismatch for '" + name + "'");
    }
    auto w = const_cast<autodiff::Tensor&>(t).value_mut();
    auto grads = t.grad();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double g = grads.empty() ? 0.0 : grads[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) +
                         cfg_.weight_decay * w[i]);
    }
  }
  return true;
}

void AdamW::serialize(model::BlobFile* blob, const std::string& prefix) const {
  blob->extras[prefix + ".t"] = t_;
  blob->extras[prefix + ".skipped"] = skipped_;
  blob->extras[prefix + ".lr"] = cfg_.lr;
  for (const auto& [name, m] : m_) {
    blob->tensors.emplace(prefix + ".m." + name,
                          std::make_pair(autodiff::Shape{static_cast<int>(m.size())}, m));
  }
  for (const auto& [name, v] : v_) {
    blob->tensors.emplace(prefix + ".v." + name,
                          std::make_pair(autodiff::Shape{static_cast<int>(v.size())}, v));
  }
}

void AdamW::deserialize(const model::BlobFile& blob, const std::string& prefix,
                        const model::Params& params) {
  t_ = blob.extras.at(prefix + ".t").get<long>();
  skipped_ = blob.extras.at(prefix + ".skipped").get<long>();
  m_.clear();
  v_.clear();
  for (const auto& [name, t] : params.tensors) {
    auto mit = blob.tensors.find(prefix + ".m." + name);
    auto vit = blob.tensors.find(prefix + ".v." + name);
    if (mit == blob.tensors.end() || vit == blob.tensors.end()) {
      throw CheckpointError("optimizer state missing for '" + name + "'");
    }
    if (mit->second.second.size() != t.numel() ||
        vit->second.second.size() != t.numel()) {
      throw CheckpointError("optimizer state size mismatch for '" + name + "'");
    }
    m_[name] = mit->second.second;
    v_[name] = vit->second.second;
  }
}

}  // namespace msda::pipeline
