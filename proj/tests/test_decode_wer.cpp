// tests/test_decode_wer.cpp

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

#include <algorithm>
#include <vector>

#include "doctest.h"
#include "msda/error.hpp"
#include "msda/eval/decode.hpp"
#include "msda/eval/wer.hpp"
#include "msda/rng.hpp"

using namespace msda;

namespace {

// Independent edit-distance oracle: plain Levenshtein cost over words.
int levenshtein(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<int> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      const int sub = prev[j - 1] + (a[i - 1] != b[j - 1]);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

std::vector<int> random_seq(Rng& rng, int max_len, int vocab) {
  std::vector<int> s(rng.uniform_below(static_cast<std::uint64_t>(max_len) + 1));
  for (auto& x : s) x = 1 + static_cast<int>(rng.uniform_below(vocab));
  return s;
}

}  // namespace

TEST_CASE("greedy decode collapses repeats and strips blanks") {
  // Frames x vocab log-probs; argmax column per frame spells the path.
  auto lp = [](std::vector<int> path, int V) {
    std::vector<double> m(path.size() * static_cast<std::size_t>(V), -10.0);
    for (std::size_t t = 0; t < path.size(); ++t)
      m[t * static_cast<std::size_t>(V) + static_cast<std::size_t>(path[t])] = -0.1;
    return m;
  };
  CHECK(eval::greedy_decode(lp({0, 1, 1, 0, 1, 2, 2}, 3), 7, 3) ==
        std::vector<int>({1, 1, 2}));
  CHECK(eval::greedy_decode(lp({0, 0, 0}, 3), 3, 3).empty());
  CHECK(eval::greedy_decode(lp({2, 2, 2}, 3), 3, 3) == std::vector<int>({2}));
  CHECK_THROWS_AS((void)eval::greedy_decode({}, 0, 3), msda::ValueError);
}

TEST_CASE("greedy decode breaks ties toward the lowest index") {
  std::vector<double> lp = {-0.5, -0.5, -2.0};
  CHECK(eval::greedy_decode(lp, 1, 3).empty());  // blank (index 0) wins the tie
  std::vector<double> lp2 = {-2.0, -0.5, -0.5};
  CHECK(eval::greedy_decode(lp2, 1, 3) == std::vector<int>({1}));
}

TEST_CASE("wer_align matches a Levenshtein oracle over random pairs") {
  Rng rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    auto ref = random_seq(rng, 8, 5);
    auto hyp = random_seq(rng, 8, 5);
    auto c = eval::wer_align(ref, hyp);
    CHECK(c.total() == levenshtein(ref, hyp));
    // Counts must be consistent with the length difference.
    CHECK(c.deletions - c.insertions ==
          static_cast<int>(ref.size()) - static_cast<int>(hyp.size()));
    CHECK(c.substitutions >= 0);
    CHECK(c.deletions >= 0);
    CHECK(c.insertions >= 0);
  }
}

TEST_CASE("wer_align splits deletions and insertions symmetrically") {
  Rng rng(32);
  for (int trial = 0; trial < 300; ++trial) {
    auto a = random_seq(rng, 7, 4);
    auto b = random_seq(rng, 7, 4);
    auto ab = eval::wer_align(a, b);
    auto ba = eval::wer_align(b, a);
    CHECK(ab.substitutions == ba.substitutions);
    CHECK(ab.deletions == ba.insertions);
    CHECK(ab.insertions == ba.deletions);
  }
}

TEST_CASE("wer hand cases") {
  auto c = eval::wer_align(std::vector<int>{1, 2, 3}, std::vector<int>{1, 2, 3});
  CHECK(c.total() == 0);
  c = eval::wer_align(std::vector<int>{1, 2, 3}, std::vector<int>{1, 4, 3});
  CHECK(c.substitutions == 1);
  CHECK(c.total() == 1);
  c = eval::wer_align(std::vector<int>{1, 2, 3}, std::vector<int>{1, 3});
  CHECK(c.deletions == 1);
  CHECK(c.total() == 1);
  c = eval::wer_align(std::vector<int>{1, 3}, std::vector<int>{1, 2, 3});
  CHECK(c.insertions == 1);
  CHECK(c.total() == 1);
  c = eval::wer_align(std::vector<int>{1, 2}, std::vector<int>{});
  CHECK(c.deletions == 2);
  // WER can exceed 1 with enough insertions.
  CHECK(eval::wer(std::vector<int>{1}, std::vector<int>{2, 3, 4}) ==
        doctest::Approx(3.0));
  CHECK_THROWS_AS((void)eval::wer(std::vector<int>{}, std::vector<int>{1}),
                  msda::ValueError);
}
