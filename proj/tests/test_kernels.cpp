// tests/test_kernels.cpp

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
#include <cstring>
#include <string>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "msda/kernels/kernels.hpp"
#include "msda/rng.hpp"

using namespace msda;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b,
                 double tol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i] == doctest::Approx(b[i]).epsilon(tol).scale(1.0));
  }
}

}  // namespace

TEST_CASE("scalar matmuls match an independent triple loop") {
  const kernels::Ops& ops = kernels::scalar_ops();
  Rng rng(5);
  for (auto [m, k, n] : std::vector<std::tuple<int, int, int>>{
           {1, 1, 1}, {3, 5, 7}, {8, 8, 8}, {13, 9, 17}}) {
    const std::size_t M = m, K = k, N = n;

    // C[m x n] = A[m x k] B[k x n]
    auto a = random_vec(rng, M * K);
    auto b = random_vec(rng, K * N);
    std::vector<double> c(M * N, 0.0), ref(M * N, 0.0);
    ops.matmul_nn(c.data(), a.data(), b.data(), M, K, N, false);
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t j = 0; j < N; ++j)
        for (std::size_t p = 0; p < K; ++p)
          ref[i * N + j] += a[i * K + p] * b[p * N + j];
    check_close(c, ref, 1e-12);

    // C[m x n] = A[m x k] B[n x k]^T
    auto bt = random_vec(rng, N * K);
    std::fill(c.begin(), c.end(), 0.0);
    std::fill(ref.begin(), ref.end(), 0.0);
    ops.matmul_nt(c.data(), a.data(), bt.data(), M, K, N, false);
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t j = 0; j < N; ++j)
        for (std::size_t p = 0; p < K; ++p)
          ref[i * N + j] += a[i * K + p] * bt[j * K + p];
    check_close(c, ref, 1e-12);

    // C[k x n] = A[m x k]^T B[m x n]
    auto b2 = random_vec(rng, M * N);
    std::vector<double> c2(K * N, 0.0), ref2(K * N, 0.0);
    ops.matmul_tn(c2.data(), a.data(), b2.data(), M, K, N, false);
    for (std::size_t p = 0; p < K; ++p)
      for (std::size_t j = 0; j < N; ++j)
        for (std::size_t i = 0; i < M; ++i)
          ref2[p * N + j] += a[i * K + p] * b2[i * N + j];
    check_close(c2, ref2, 1e-12);
  }
}

TEST_CASE("accumulate flag adds instead of overwriting") {
  const kernels::Ops& ops = kernels::scalar_ops();
  Rng rng(6);
  auto a = random_vec(rng, 6);
  auto b = random_vec(rng, 6);
  std::vector<double> plain(4, 0.0);
  ops.matmul_nn(plain.data(), a.data(), b.data(), 2, 3, 2, false);
  std::vector<double> c(4, 1.5);
  ops.matmul_nn(c.data(), a.data(), b.data(), 2, 3, 2, true);
  for (int i = 0; i < 4; ++i) CHECK(c[i] == doctest::Approx(plain[i] + 1.5));
}

TEST_CASE("vector kernels match scalar kernels across sizes") {
  const kernels::Ops& scalar = kernels::scalar_ops();
  const kernels::Ops* vec = kernels::avx2_ops();
  if (vec == nullptr) {
    MESSAGE("vector backend unavailable on this machine; skipping");
    return;
  }
  Rng rng(7);
  // Sizes straddle the 4-lane width to exercise remainder handling.
  for (std::size_t n : std::vector<std::size_t>{1, 2, 3, 4, 5, 7, 8, 15, 64, 100, 257}) {
    auto a = random_vec(rng, n);
    auto b = random_vec(rng, n);
    std::vector<double> r1(n), r2(n);

    scalar.add(r1.data(), a.data(), b.data(), n);
    vec->add(r2.data(), a.data(), b.data(), n);
    check_close(r1, r2, 1e-15);

    scalar.sub(r1.data(), a.data(), b.data(), n);
    vec->sub(r2.data(), a.data(), b.data(), n);
    check_close(r1, r2, 1e-15);

    scalar.mul(r1.data(), a.data(), b.data(), n);
    vec->mul(r2.data(), a.data(), b.data(), n);
    check_close(r1, r2, 1e-15);

    scalar.scale(r1.data(), a.data(), 1.7, n);
    vec->scale(r2.data(), a.data(), 1.7, n);
    check_close(r1, r2, 1e-15);

    r1 = b;
    r2 = b;
    scalar.axpy(r1.data(), 0.3, a.data(), n);
    vec->axpy(r2.data(), 0.3, a.data(), n);
    check_close(r1, r2, 1e-12);

    CHECK(scalar.dot(a.data(), b.data(), n) ==
          doctest::Approx(vec->dot(a.data(), b.data(), n)).epsilon(1e-12));
    CHECK(scalar.sum(a.data(), n) ==
          doctest::Approx(vec->sum(a.data(), n)).epsilon(1e-12));
  }
}

TEST_CASE("vector matmuls match scalar matmuls") {
  const kernels::Ops& scalar = kernels::scalar_ops();
  const kernels::Ops* vec = kernels::avx2_ops();
  if (vec == nullptr) return;
  Rng rng(8);
  for (auto [m, k, n] : std::vector<std::tuple<int, int, int>>{
           {1, 1, 1}, {2, 3, 4}, {5, 5, 5}, {16, 16, 16}, {7, 31, 13}, {33, 17, 9}}) {
    const std::size_t M = m, K = k, N = n;
    auto a = random_vec(rng, M * K);
    auto b = random_vec(rng, K * N);
    auto bt = random_vec(rng, N * K);
    auto b2 = random_vec(rng, M * N);

    std::vector<double> r1(M * N, 0.5), r2(M * N, 0.5);
    scalar.matmul_nn(r1.data(), a.data(), b.data(), M, K, N, true);
    vec->matmul_nn(r2.data(), a.data(), b.data(), M, K, N, true);
    check_close(r1, r2, 1e-12);

    scalar.matmul_nt(r1.data(), a.data(), bt.data(), M, K, N, false);
    vec->matmul_nt(r2.data(), a.data(), bt.data(), M, K, N, false);
    check_close(r1, r2, 1e-12);

    std::vector<double> t1(K * N, 0.0), t2(K * N, 0.0);
    scalar.matmul_tn(t1.data(), a.data(), b2.data(), M, K, N, false);
    vec->matmul_tn(t2.data(), a.data(), b2.data(), M, K, N, false);
    check_close(t1, t2, 1e-12);
  }
}

TEST_CASE("runtime selection honors explicit choice") {
  const std::string before = kernels::active().name;
  REQUIRE(kernels::set_active("scalar"));
  CHECK(std::string(kernels::active().name) == "scalar");
  if (kernels::avx2_ops() != nullptr) {
    REQUIRE(kernels::set_active("avx2"));
    CHECK(std::string(kernels::active().name) == "avx2");
  }
  CHECK_FALSE(kernels::set_active("nope"));
  REQUIRE(kernels::set_active("auto"));
  CHECK(kernels::active().name != nullptr);
  (void)before;
}
