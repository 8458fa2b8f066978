// msda/autodiff/tensor.hpp

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

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "msda/error.hpp"

namespace msda::autodiff {

// Rank 0 (scalar) is the empty shape. Rank 1 and 2 cover everything else;
// sequences are [time x channels] row-major throughout.
using Shape = std::vector<int>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct Node {
  Shape shape;
  std::vector<double> value;
  // Empty until a gradient is first accumulated; empty means zero.
  std::vector<double> grad;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into every stored parent's grad.
  std::function<void(Node&)> backward_fn;

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

// Thread-local switch. While disabled, new ops record no parents and no
// backward functions, so forward passes build plain values.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// Value handle over a shared graph node. Copies alias the same node.
class Tensor {
 public:
  Tensor() = default;

  static Tensor leaf(Shape shape, std::vector<double> value,
                     bool requires_grad = false);

  bool defined() const { return static_cast<bool>(n_); }
  const Shape& shape() const { return n_->shape; }
  int rank() const { return static_cast<int>(n_->shape.size()); }
  int dim(int i) const { return n_->shape[static_cast<std::size_t>(i)]; }
  std::size_t numel() const { return n_->value.size(); }

  std::span<const double> value() const { return n_->value; }
  // In-place mutation is reserved for leaves (optimizer updates); mutating
  // an interior node would desynchronize saved forward intermediates.
  std::span<double> value_mut() { return n_->value; }

  bool requires_grad() const { return n_->requires_grad; }
  std::span<const double> grad() const { return n_->grad; }
  bool has_grad() const { return !n_->grad.empty(); }
  std::vector<double>& ensure_grad() { return n_->ensure_grad(); }
  void zero_grad() { n_->grad.clear(); }

  double item() const;
  double at(std::initializer_list<int> idx) const;
  const char* op() const { return n_->op; }

  // Reverse pass from a scalar root. Seeds the root gradient with 1 and
  // accumulates (+=) into every reachable node, so calling backward on two
  // roots sums their gradients unless zero_grad runs in between.
  void backward() const;

  Node* node() const { return n_.get(); }
  const std::shared_ptr<Node>& shared_node() const { return n_; }

 private:
  explicit Tensor(std::shared_ptr<Node> n) : n_(std::move(n)) {}
  friend Tensor make_op(const char* name, Shape shape,
                        std::vector<double> value, std::vector<Tensor> parents,
                        std::function<void(Node&)> backward_fn);

  std::shared_ptr<Node> n_;
};

// Builds an op node. When gradients are disabled or no parent requires them,
// the node is detached: no parents, no backward function. A backward function
// must accumulate into every parent it stores.
Tensor make_op(const char* name, Shape shape, std::vector<double> value,
               std::vector<Tensor> parents,
               std::function<void(Node&)> backward_fn);

}  // namespace msda::autodiff
