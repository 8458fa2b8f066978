// autodiff/tensor.cpp

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

#include "msda/autodiff/tensor.hpp"

#include <sstream>
#include <unordered_set>
#include <utility>

namespace msda::autodiff {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Tensor Tensor::leaf(Shape shape, std::vector<double> value,
                    bool requires_grad) {
  if (shape_numel(shape) != value.size()) {
    throw ShapeError("Tensor::leaf: shape " + shape_str(shape) + " implies " +
                     std::to_string(shape_numel(shape)) + " values, got " +
                     std::to_string(value.size()));
  }
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError(std::string("Tensor::item: expected one element, shape ") +
                     shape_str(n_->shape));
  }
  return n_->value[0];
}

double Tensor::at(std::initializer_list<int> idx) const {
  if (idx.size() != n_->shape.size()) {
    throw ShapeError("Tensor::at: rank mismatch for shape " +
                     shape_str(n_->shape));
  }
  std::size_t flat = 0;
  std::size_t i = 0;
  for (int v : idx) {
    if (v < 0 || v >= n_->shape[i]) {
      throw ShapeError("Tensor::at: index out of range for shape " +
                       shape_str(n_->shape));
    }
    flat = flat * static_cast<std::size_t>(n_->shape[i]) +
           static_cast<std::size_t>(v);
    ++i;
  }
  return n_->value[flat];
}

Tensor make_op(const char* name, Shape shape, std::vector<double> value,
               std::vector<Tensor> parents,
               std::function<void(Node&)> backward_fn) {
  if (shape_numel(shape) != value.size()) {
    throw ShapeError(std::string(name) + ": shape " + shape_str(shape) +
                     " implies " + std::to_string(shape_numel(shape)) +
                     " values, got " + std::to_string(value.size()));
  }
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->op = name;
  bool track = false;
  if (grad_enabled()) {
    for (const Tensor& p : parents) {
      if (p.defined() && p.requires_grad()) {
        track = true;
        break;
      }
    }
  }
  if (track) {
    n->requires_grad = true;
    n->parents.reserve(parents.size());
    for (const Tensor& p : parents) n->parents.push_back(p.shared_node());
    n->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(n));
}

void Tensor::backward() const {
  if (!defined()) throw ValueError("backward: undefined tensor");
  if (numel() != 1) {
    throw ShapeError("backward: root must be a scalar, got shape " +
                     shape_str(n_->shape));
  }
  if (!n_->requires_grad) return;

  // Reverse topological order: leaves first in `order`, root last.
  std::vector<Node*> order;
  std::unordered_set<Node*> scheduled;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(n_.get(), 0);
  scheduled.insert(n_.get());
  while (!stack.empty()) {
    auto& top = stack.back();
    Node* node = top.first;
    if (top.second < node->parents.size()) {
      Node* parent = node->parents[top.second++].get();
      if (scheduled.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  n_->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
}

}  // namespace msda::autodiff
