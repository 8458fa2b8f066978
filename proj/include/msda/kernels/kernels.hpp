// msda/kernels/kernels.hpp

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
#include <string_view>

namespace msda::kernels {

// Dense double-precision primitives behind the tensor ops. Two backends:
// a portable scalar reference and an AVX2+FMA variant, selected at runtime.
// Backends may differ in rounding (FMA keeps one extra product bit), so
// cross-backend comparisons are tolerance-based, not bitwise.
struct Ops {
  const char* name;

  void (*add)(double* dst, const double* a, const double* b, std::size_t n);
  void (*sub)(double* dst, const double* a, const double* b, std::size_t n);
  void (*mul)(double* dst, const double* a, const double* b, std::size_t n);
  void (*scale)(double* dst, const double* a, double s, std::size_t n);
  // dst += a * x
  void (*axpy)(double* dst, double a, const double* x, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);

  // C[m x n] = A[m x k] * B[k x n], added into C when accumulate is set.
  void (*matmul_nn)(double* c, const double* a, const double* b, std::size_t m,
                    std::size_t k, std::size_t n, bool accumulate);
  // C[m x n] = A[m x k] * B[n x k]^T
  void (*matmul_nt)(double* c, const double* a, const double* b, std::size_t m,
                    std::size_t k, std::size_t n, bool accumulate);
  // C[k x n] = A[m x k]^T * B[m x n]
  void (*matmul_tn)(double* c, const double* a, const double* b, std::size_t m,
                    std::size_t k, std::size_t n, bool accumulate);
};

// Portable reference backend. Always available.
const Ops& scalar_ops();

// AVX2 backend, or nullptr when the build or the CPU lacks AVX2+FMA.
const Ops* avx2_ops();

// Process-wide active backend. Defaults to the best supported one; the
// MSDA_KERNELS environment variable ("scalar", "avx2", "auto") overrides.
const Ops& active();

// Select a backend by name. Returns false (and leaves the selection alone)
// when the name is unknown or the backend is unsupported on this machine.
bool set_active(std::string_view name);

}  // namespace msda::kernels
