// tests/test_ctc.cpp

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
#include <limits>
#include <vector>

#include "doctest.h"
#include "gradcheck.hpp"
#include "msda/autodiff/ops.hpp"
#include "msda/error.hpp"
#include "msda/losses/ctc.hpp"
#include "msda/rng.hpp"

using namespace msda;
namespace ad = msda::autodiff;

namespace {

// Independent oracle: enumerate every frame-level path, collapse it (merge
// repeats, then drop blanks), and sum the probabilities of paths that
// collapse to the target. Exponential in T; keep T tiny.
std::vector<int> collapse(const std::vector<int>& path, int blank) {
  std::vector<int> out;
  int prev = -1;
  for (int s : path) {
    if (s != prev && s != blank) out.push_back(s);
    prev = s;
  }
  return out;
}

double oracle_neg_log_prob(const std::vector<double>& lp, int T, int V,
                           const std::vector<int>& target, int blank) {
  std::vector<int> path(static_cast<std::size_t>(T), 0);
  double total = 0.0;
  while (true) {
    if (collapse(path, blank) == target) {
      double logp = 0.0;
      for (int t = 0; t < T; ++t)
        logp += lp[static_cast<std::size_t>(t) * V + path[static_cast<std::size_t>(t)]];
      total += std::exp(logp);
    }
    int i = T - 1;
    while (i >= 0 && path[static_cast<std::size_t>(i)] == V - 1) {
      path[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) break;
    ++path[static_cast<std::size_t>(i)];
  }
  return -std::log(total);
}

std::vector<double> random_log_probs(Rng& rng, int T, int V) {
  std::vector<double> lp(static_cast<std::size_t>(T) * V);
  for (int t = 0; t < T; ++t) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int v = 0; v < V; ++v) {
      lp[static_cast<std::size_t>(t) * V + v] = 2.0 * rng.normal();
      mx = std::max(mx, lp[static_cast<std::size_t>(t) * V + v]);
    }
    double z = 0.0;
    for (int v = 0; v < V; ++v)
      z += std::exp(lp[static_cast<std::size_t>(t) * V + v] - mx);
    const double logz = mx + std::log(z);
    for (int v = 0; v < V; ++v) lp[static_cast<std::size_t>(t) * V + v] -= logz;
  }
  return lp;
}

}  // namespace

TEST_CASE("minimum frame count accounts for adjacent repeats") {
  auto min_frames = [](std::vector<int> y) { return losses::ctc_min_frames(y); };
  CHECK(min_frames({}) == 0);
  CHECK(min_frames({1}) == 1);
  CHECK(min_frames({1, 2}) == 2);
  CHECK(min_frames({1, 1}) == 3);
  CHECK(min_frames({1, 1, 1}) == 5);
  CHECK(min_frames({1, 2, 2, 3}) == 5);
}

TEST_CASE("hand-checked tiny cases") {
  // T=1, single label: the only path is the label itself.
  {
    Rng rng(1);
    auto lp = random_log_probs(rng, 1, 3);
    ad::Tensor t = ad::Tensor::leaf({1, 3}, lp);
    std::vector<int> y = {2};
    CHECK(losses::ctc_loss(t, y).item() == doctest::Approx(-lp[2]).epsilon(1e-12));
  }
  // T=2, single label a: paths (a,-), (-,a), (a,a).
  {
    Rng rng(2);
    auto lp = random_log_probs(rng, 2, 2);
    ad::Tensor t = ad::Tensor::leaf({2, 2}, lp);
    std::vector<int> y = {1};
    const double p = std::exp(lp[1] + lp[2]) + std::exp(lp[0] + lp[3]) +
                     std::exp(lp[1] + lp[3]);
    CHECK(losses::ctc_loss(t, y).item() == doctest::Approx(-std::log(p)).epsilon(1e-12));
  }
  // Empty target: every frame must emit blank.
  {
    Rng rng(3);
    auto lp = random_log_probs(rng, 3, 2);
    ad::Tensor t = ad::Tensor::leaf({3, 2}, lp);
    const double expect = -(lp[0] + lp[2] + lp[4]);
    CHECK(losses::ctc_loss(t, std::vector<int>{}).item() ==
          doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("forward values match exhaustive path enumeration") {
  Rng rng(42);
  int checked = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const int T = 1 + static_cast<int>(rng.uniform_below(5));
    const int V = 2 + static_cast<int>(rng.uniform_below(3));
    const int L = static_cast<int>(rng.uniform_below(4));
    std::vector<int> y(static_cast<std::size_t>(L));
    for (auto& s : y) s = 1 + static_cast<int>(rng.uniform_below(V - 1));
    auto lp = random_log_probs(rng, T, V);
    ad::Tensor t = ad::Tensor::leaf({T, V}, lp);
    if (losses::ctc_min_frames(y) > T) {
      CHECK_THROWS_AS((void)losses::ctc_loss(t, y), msda::AlignmentError);
      continue;
    }
    const double got = losses::ctc_loss(t, y).item();
    const double want = oracle_neg_log_prob(lp, T, V, y, 0);
    CHECK(got == doctest::Approx(want).epsilon(1e-10));
    CHECK(losses::ctc_loss_value(lp, T, V, y) == doctest::Approx(got).epsilon(1e-12));
    ++checked;
  }
  CHECK(checked > 200);
}

TEST_CASE("gradients match finite differences") {
  Rng rng(43);
  for (int trial = 0; trial < 25; ++trial) {
    const int T = 3 + static_cast<int>(rng.uniform_below(4));
    const int V = 3 + static_cast<int>(rng.uniform_below(3));
    std::vector<int> y;
    for (int i = 0; i < 2; ++i) y.push_back(1 + static_cast<int>(rng.uniform_below(V - 1)));
    if (losses::ctc_min_frames(y) > T) continue;
    auto lp = random_log_probs(rng, T, V);
    auto leaf = ad::Tensor::leaf({T, V}, lp, true);
    auto res = testing::gradcheck(
        [&y](const std::vector<ad::Tensor>& l) {
          return losses::ctc_loss(l[0], y);
        },
        {leaf}, 1e-4, 1e-7);
    INFO(res.detail);
    CHECK(res.ok);
  }
}

TEST_CASE("input validation") {
  auto lp = std::vector<double>{-0.1, -0.2, -0.3, -0.4};
  auto t = ad::Tensor::leaf({2, 2}, lp);
  CHECK_THROWS_AS((void)losses::ctc_loss(t, std::vector<int>{5}), msda::ValueError);
  CHECK_THROWS_AS((void)losses::ctc_loss(t, std::vector<int>{0}), msda::ValueError);
  CHECK_THROWS_AS((void)losses::ctc_loss(t, std::vector<int>{1}, 7), msda::ValueError);
  auto nan = ad::Tensor::leaf({1, 2}, {std::nan(""), -0.5});
  CHECK_THROWS_AS((void)losses::ctc_loss(nan, std::vector<int>{}), msda::ValueError);
  // Required symbol has zero probability everywhere: no usable alignment.
  const double ninf = -std::numeric_limits<double>::infinity();
  auto zero = ad::Tensor::leaf({2, 2}, {ninf, ninf, ninf, ninf});
  CHECK_THROWS_AS((void)losses::ctc_loss(zero, std::vector<int>{1}), msda::ValueError);
}

TEST_CASE("longer sequences stay finite and normalized inputs bound the loss") {
  Rng rng(44);
  const int T = 60, V = 21;
  auto lp = random_log_probs(rng, T, V);
  auto t = ad::Tensor::leaf({T, V}, lp);
  std::vector<int> y = {3, 7, 3, 11, 20, 1, 1, 5};
  const double loss = losses::ctc_loss(t, y).item();
  CHECK(std::isfinite(loss));
  CHECK(loss > 0.0);  // probabilities below one
}
