// tests/test_autodiff.cpp

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

#include <cmath>
#include <vector>

#include "doctest.h"
#include "gradcheck.hpp"
#include "msda/autodiff/ops.hpp"
#include "msda/rng.hpp"

using namespace msda;
namespace ad = msda::autodiff;
using ad::Tensor;
using msda::testing::gradcheck;

namespace {

Tensor leaf(ad::Shape shape, Rng& rng, double scale = 1.0) {
  std::vector<double> v(ad::shape_numel(shape));
  for (auto& x : v) x = scale * rng.normal();
  return Tensor::leaf(std::move(shape), std::move(v), true);
}

Tensor positive_leaf(ad::Shape shape, Rng& rng) {
  std::vector<double> v(ad::shape_numel(shape));
  for (auto& x : v) x = 0.05 + std::abs(rng.normal());
  return Tensor::leaf(std::move(shape), std::move(v), true);
}

void expect_ok(const msda::testing::GradCheckResult& r) {
  INFO(r.detail);
  CHECK(r.ok);
}

}  // namespace

TEST_CASE("value basics: leaf, item, shapes") {
  auto t = Tensor::leaf({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.rank() == 2);
  CHECK(t.numel() == 6);
  CHECK(t.at({1, 2}) == 6);
  CHECK(ad::scalar(4.25).item() == 4.25);
  CHECK_THROWS_AS((void)Tensor::leaf({2, 2}, {1.0}), msda::ShapeError);
}

TEST_CASE("backward requires a scalar root and accumulates") {
  auto x = Tensor::leaf({2}, {3.0, 4.0}, true);
  auto y = ad::sum(ad::mul(x, x));
  y.backward();
  REQUIRE(x.has_grad());
  CHECK(x.grad()[0] == doctest::Approx(6.0));
  CHECK(x.grad()[1] == doctest::Approx(8.0));
  // Second backward without zeroing doubles the gradient.
  auto y2 = ad::sum(ad::mul(x, x));
  y2.backward();
  CHECK(x.grad()[0] == doctest::Approx(12.0));
  auto vec = Tensor::leaf({2}, {1.0, 2.0}, true);
  CHECK_THROWS_AS(ad::mul(vec, vec).backward(), msda::ShapeError);
}

TEST_CASE("no-grad mode builds detached graphs") {
  auto x = Tensor::leaf({2}, {1.0, 2.0}, true);
  {
    ad::NoGradGuard ng;
    auto y = ad::sum(ad::mul(x, x));
    CHECK(y.node()->parents.empty());
  }
  CHECK(ad::grad_enabled());
}

TEST_CASE("grad pruning skips branches that do not require grad") {
  auto x = Tensor::leaf({3}, {1, 2, 3}, true);
  auto c = Tensor::leaf({3}, {4, 5, 6}, false);
  auto y = ad::sum(ad::mul(x, c));
  y.backward();
  CHECK(x.has_grad());
  CHECK_FALSE(c.has_grad());
}

TEST_CASE("elementwise op gradients") {
  Rng rng(101);
  for (int trial = 0; trial < 3; ++trial) {
    auto a = leaf({2, 3}, rng);
    auto b = leaf({2, 3}, rng);
    expect_ok(gradcheck(
        [](const std::vector<Tensor>& l) { return ad::sum(ad::add(l[0], l[1])); },
        {a, b}));
    expect_ok(gradcheck(
        [](const std::vector<Tensor>& l) { return ad::sum(ad::sub(l[0], l[1])); },
        {a, b}));
    expect_ok(gradcheck(
        [](const std::vector<Tensor>& l) { return ad::sum(ad::mul(l[0], l[1])); },
        {a, b}));
    expect_ok(gradcheck(
        [](const std::vector<Tensor>& l) { return ad::sum(ad::scale(l[0], -1.7)); },
        {a}));
    expect_ok(gradcheck(
        [](const std::vector<Tensor>& l) { return ad::sum(ad::exp(l[0])); }, {a}));
    expect_ok(gradcheck(
        [](const std::vector<Tensor>& l) { return ad::sum(ad::gelu(l[0])); }, {a}));
  }
}

TEST_CASE("relu gradient away from the kink") {
  // Keep probes clear of zero where the subgradient is ambiguous.
  auto a = Tensor::leaf({5}, {-2.0, -0.7, 0.9, 1.5, 3.0}, true);
  expect_ok(gradcheck(
      [](const std::vector<Tensor>& l) { return ad::sum(ad::relu(l[0])); }, {a}));
}

TEST_CASE("xlogx gradient and edge cases") {
  Rng rng(103);
  auto a = positive_leaf({2, 4}, rng);
  expect_ok(gradcheck(
      [](const std::vector<Tensor>& l) { return ad::sum(ad::xlogx(l[0])); }, {a},
      1e-4, 1e-6, 1e-6));
  auto z = Tensor::leaf({2}, {0.0, 0.5}, true);
  auto y = ad::sum(ad::xlogx(z));
  CHECK(y.item() == doctest::Approx(0.5 * std::log(0.5)));
  y.backward();
  CHECK(z.grad()[0] == 0.0);  // continuous extension at zero
  auto neg = Tensor::leaf({1}, {-0.1});
  CHECK_THROWS_AS((void)ad::xlogx(neg), msda::ValueError);
}

TEST_CASE("add_n and add_rowvec gradients") {
  Rng rng(104);
  auto a = leaf({2, 3}, rng);
  auto b = leaf({2, 3}, rng);
  auto c = leaf({2, 3}, rng);
  expect_ok(gradcheck(
      [](const std::vector<Tensor>& l) {
        return ad::sum(ad::add_n({l[0], l[1], l[2]}));
      },
      {a, b, c}));
  auto v = leaf({3}, rng);
  expect_ok(gradcheck(
      [](const std::vector<Tensor>& l) {
        return ad::sum(ad::mul(ad::add_rowvec(l[0], l[1]), l[0]));
      },
      {a, v}));
}

TEST_CASE("matmul and transpose gradients") {
  Rng rng(105);
  auto a = leaf({3, 4}, rng);
  auto b = leaf({4, 2}, rng);
  expect_ok(gradcheck(
      [](const std::vector<Tensor>& l) {
        return ad::sum(ad::matmul(l[0], l[1]));
      },
      {a, b}));
  expect_ok(gradcheck(
      [](const std::vector<Tensor>& l) {
        auto t = ad::transpose(l[0]);          // [4 x 3]
        return ad::sum(ad::matmul(t, l[0]));   // [4 x 4]
      },
      {a}));
  CHECK_THROWS_AS((void)ad::matmul(a, a), msda::ShapeError);
}

TEST_CASE("conv1d gradients with stride and padding") {
  Rng rng(106);
  const int T = 7, Cin = 3, Cout = 2, K = 3;
  auto x = leaf({T, Cin}, rng);
  auto w = leaf({K * Cin, Cout}, rng, 0.5);
  auto b = leaf({Cout}, rng, 0.1);
  for (int stride : {1, 2}) {
    expect_ok(gradcheck(
        [stride](const std::vector<Tensor>& l) {
          auto y = ad::conv1d(l[0], l[1], l[2], 3, stride, 1, 1);
          return ad::sum(ad::mul(y, y));
        },
        {x, w, b}));
  }
}

TEST_CASE("reductions: sum, mean, sum_axis, mean_axis, logsumexp") {
  Rng rng(107);
  auto a = leaf({3, 4}, rng);
  expect_ok(gradcheck(
      [](const std::vector<Tensor>& l) { return ad::mean(ad::mul(l[0], l[0])); },
      {a}));
  for (int axis : {0, 1}) {
    expect_ok(gradcheck(
        [axis](const std::vector<Tensor>& l) {
          auto s = ad::sum_axis(l[0], axis);
          return ad::sum(ad::mul(s, s));
        },
        {a}));
    expect_ok(gradcheck(
        [axis](const std::vector<Tensor>& l) {
          auto s = ad::mean_axis(l[0], axis);
          return ad::sum(ad::mul(s, s));
        },
        {a}));
  }
  expect_ok(gradcheck(
      [](const std::vector<Tensor>& l) { return ad::logsumexp(l[0]); }, {a}));
  // Value check against a direct evaluation.
  auto v = Tensor::leaf({3}, {1.0, 2.0, 3.0});
  double direct = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0));
  CHECK(ad::logsumexp(v).item() == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("softmax and log_softmax rows") {
  Rng rng(108);
  auto a = leaf({3, 5}, rng, 2.0);
  auto weight = leaf({3, 5}, rng);
  expect_ok(gradcheck(
      [&](const std::vector<Tensor>& l) {
        return ad::sum(ad::mul(ad::softmax_rows(l[0]), l[1]));
      },
      {a, weight}));
  expect_ok(gradcheck(
      [&](const std::vector<Tensor>& l) {
        return ad::sum(ad::mul(ad::log_softmax_rows(l[0]), l[1]));
      },
      {a, weight}));
  // Rows sum to one.
  auto sm = ad::softmax_rows(a);
  for (int r = 0; r < 3; ++r) {
    double s = 0.0;
    for (int c = 0; c < 5; ++c) s += sm.at({r, c});
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("layer_norm_rows gradient") {
  Rng rng(109);
  auto x = leaf({4, 6}, rng, 1.5);
  auto g = positive_leaf({6}, rng);
  auto b = leaf({6}, rng, 0.3);
  auto w = leaf({4, 6}, rng);
  expect_ok(gradcheck(
      [&](const std::vector<Tensor>& l) {
        return ad::sum(ad::mul(ad::layer_norm_rows(l[0], l[1], l[2], 1e-5), l[3]));
      },
      {x, g, b, w},
      2e-4, 1e-6));
  // Normalized rows have near-zero mean and near-unit variance before affine.
  auto ones = Tensor::leaf({6}, std::vector<double>(6, 1.0));
  auto zero = Tensor::leaf({6}, std::vector<double>(6, 0.0));
  auto ln = ad::layer_norm_rows(x, ones, zero, 1e-12);
  for (int r = 0; r < 4; ++r) {
    double mean = 0.0, var = 0.0;
    for (int c = 0; c < 6; ++c) mean += ln.at({r, c});
    mean /= 6.0;
    for (int c = 0; c < 6; ++c) {
      double d = ln.at({r, c}) - mean;
      var += d * d;
    }
    var /= 6.0;
    CHECK(std::abs(mean) < 1e-10);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("structure ops: vstack, concat_cols, slices, gather, replace, at_index") {
  Rng rng(110);
  auto r0 = leaf({4}, rng);
  auto r1 = leaf({4}, rng);
  auto r2 = leaf({4}, rng);
  expect_ok(gradcheck(
      [](const std::vector<Tensor>& l) {
        auto m = ad::vstack({l[0], l[1], l[2]});
        return ad::sum(ad::mul(m, m));
      },
      {r0, r1, r2}));

  auto a = leaf({3, 2}, rng);
  auto b = leaf({3, 3}, rng);
  expect_ok(gradcheck(
      [](const std::vector<Tensor>& l) {
        auto m = ad::concat_cols({l[0], l[1]});
        return ad::sum(ad::mul(m, m));
      },
      {a, b}));

  auto x = leaf({5, 3}, rng);
  expect_ok(gradcheck(
      [](const std::vector<Tensor>& l) {
        auto s = ad::slice_rows(l[0], 1, 3);
        return ad::sum(ad::mul(s, s));
      },
      {x}));
  expect_ok(gradcheck(
      [](const std::vector<Tensor>& l) {
        auto s = ad::slice_cols(l[0], 1, 2);
        return ad::sum(ad::mul(s, s));
      },
      {x}));
  // Repeated gather indices must accumulate into the same source rows.
  expect_ok(gradcheck(
      [](const std::vector<Tensor>& l) {
        auto g = ad::gather_rows(l[0], {0, 2, 2, 4});
        return ad::sum(ad::mul(g, g));
      },
      {x}));
  auto fill = leaf({3}, rng);
  expect_ok(gradcheck(
      [](const std::vector<Tensor>& l) {
        auto r = ad::replace_rows(l[0], {1, 3}, l[1]);
        return ad::sum(ad::mul(r, r));
      },
      {x, fill}));
  // Replaced rows get no gradient from the original tensor.
  x.node()->grad.clear();
  fill.node()->grad.clear();
  auto rep = ad::replace_rows(x, {1, 3}, fill);
  ad::sum(rep).backward();
  CHECK(x.grad()[1 * 3] == 0.0);
  CHECK(x.grad()[3 * 3] == 0.0);
  CHECK(x.grad()[0] == 1.0);
  CHECK(fill.grad()[0] == 2.0);  // two replaced rows

  auto v = leaf({4}, rng);
  expect_ok(gradcheck(
      [](const std::vector<Tensor>& l) {
        return ad::mul(ad::at_index(l[0], 2), ad::at_index(l[0], 2));
      },
      {v}));
}

TEST_CASE("cosine_rows matches a direct formula and gradchecks") {
  Rng rng(111);
  auto a = leaf({3, 4}, rng);
  auto b = leaf({3, 4}, rng);
  auto cos = ad::cosine_rows(a, b);
  for (int r = 0; r < 3; ++r) {
    double dot = 0, na = 0, nb = 0;
    for (int c = 0; c < 4; ++c) {
      double av = a.at({r, c}), bv = b.at({r, c});
      dot += av * bv;
      na += av * av;
      nb += bv * bv;
    }
    CHECK(cos.at({r}) ==
          doctest::Approx(dot / std::sqrt(na * nb)).epsilon(1e-12));
  }
  expect_ok(gradcheck(
      [](const std::vector<Tensor>& l) {
        return ad::sum(ad::cosine_rows(l[0], l[1]));
      },
      {a, b}));
  auto zero = Tensor::leaf({1, 2}, {0.0, 0.0});
  auto other = Tensor::leaf({1, 2}, {1.0, 1.0});
  CHECK_THROWS_AS((void)ad::cosine_rows(zero, other), msda::ValueError);
}

TEST_CASE("gumbel softmax: soft path gradchecks, hard path is one-hot") {
  Rng rng(112);
  auto logits = leaf({4, 5}, rng);
  // Soft mode with frozen noise is a smooth function of the logits.
  expect_ok(gradcheck(
      [](const std::vector<Tensor>& l) {
        Rng frozen(99);
        auto y = ad::gumbel_softmax_rows(l[0], 0.7, frozen, false);
        return ad::sum(ad::mul(y, y));
      },
      {logits}));

  Rng frozen(99);
  auto hard = ad::gumbel_softmax_rows(logits, 0.7, frozen, true);
  for (int r = 0; r < 4; ++r) {
    double s = 0.0;
    int ones = 0;
    for (int c = 0; c < 5; ++c) {
      double v = hard.at({r, c});
      CHECK((v == 0.0 || v == 1.0));
      s += v;
      ones += v == 1.0;
    }
    CHECK(s == 1.0);
    CHECK(ones == 1);
  }
  // Straight-through: hard output still routes gradient to the logits.
  logits.node()->grad.clear();
  Rng frozen2(99);
  auto h2 = ad::gumbel_softmax_rows(logits, 0.7, frozen2, true);
  ad::sum(ad::mul(h2, h2)).backward();
  CHECK(logits.has_grad());
  CHECK_THROWS_AS(
      (void)ad::gumbel_softmax_rows(logits, 0.0, frozen2, true), msda::ValueError);
}

TEST_CASE("operator sugar matches named ops") {
  auto a = Tensor::leaf({2}, {1.0, 2.0}, true);
  auto b = Tensor::leaf({2}, {3.0, 4.0}, true);
  auto y = ad::sum((a + b) * b - a);
  CHECK(y.item() == doctest::Approx((1 + 3) * 3 - 1 + (2 + 4) * 4 - 2));
  auto z = ad::sum(2.0 * a);
  CHECK(z.item() == doctest::Approx(6.0));
}

TEST_CASE("diamond graphs accumulate through shared nodes once per path") {
  auto x = Tensor::leaf({1}, {3.0}, true);
  auto a = ad::scale(x, 2.0);
  auto y = ad::sum(ad::mul(a, a));  // y = 4 x^2, dy/dx = 8x
  y.backward();
  CHECK(x.grad()[0] == doctest::Approx(24.0));
}
