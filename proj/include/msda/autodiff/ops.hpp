// msda/autodiff/ops.hpp

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

#include <vector>

#include "msda/autodiff/tensor.hpp"
#include "msda/rng.hpp"

namespace msda::autodiff {

// ----- creation ------------------------------------------------------------

Tensor zeros(Shape shape);
Tensor full(Shape shape, double v);
Tensor scalar(double v);
Tensor from_values(Shape shape, std::vector<double> v,
                   bool requires_grad = false);

// ----- elementwise ----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor relu(const Tensor& a);
// x * Phi(x), exact erf form.
Tensor gelu(const Tensor& a);
Tensor exp(const Tensor& a);
// x * ln(x) with the 0 log 0 = 0 convention; negative inputs are an error.
Tensor xlogx(const Tensor& a);

// Sum of any number of same-shaped tensors in one node.
Tensor add_n(const std::vector<Tensor>& parts);

// x [m x n] plus v [n] broadcast over rows.
Tensor add_rowvec(const Tensor& x, const Tensor& v);

// ----- linear algebra -------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// x [T x Cin] with weight [(K*Cin) x Cout], bias [Cout]; weight rows are
// ordered tap-major: row k*Cin + c holds tap k, input channel c. Output
// length is (T + pad_left + pad_right - K) / stride + 1.
Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias, int K,
              int stride, int pad_left, int pad_right);

// ----- reductions -----------------------------------------------------------

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// axis 0 collapses rows ([m x n] -> [n]), axis 1 collapses columns.
Tensor sum_axis(const Tensor& a, int axis);
Tensor mean_axis(const Tensor& a, int axis);
// Over all elements; inputs must be finite.
Tensor logsumexp(const Tensor& a);

// ----- row softmax family ---------------------------------------------------

Tensor softmax_rows(const Tensor& x);
Tensor log_softmax_rows(const Tensor& x);
Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias,
                       double eps = 1e-5);

// ----- structure ------------------------------------------------------------

// Stack rank-1 tensors of equal length into a matrix, one per row.
Tensor vstack(const std::vector<Tensor>& rows);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& x, int r0, int len);
Tensor slice_cols(const Tensor& x, int c0, int len);
// Rows may repeat; gradients scatter-add back.
Tensor gather_rows(const Tensor& x, const std::vector<int>& indices);
// Replace the given rows (strictly increasing indices) with a single shared
// row vector; the row's gradient collects one contribution per index.
Tensor replace_rows(const Tensor& x, const std::vector<int>& indices,
                    const Tensor& row);
Tensor at_index(const Tensor& x, int i);

// ----- similarity and sampling ---------------------------------------------

// Row-wise cosine similarity of two [m x n] tensors -> [m]. Zero-norm rows
// are an error.
Tensor cosine_rows(const Tensor& a, const Tensor& b);

// Row-wise Gumbel-softmax over logits [m x V] at the given temperature.
// Draws one Gumbel per element from `rng` in row-major order. With
// hard = true the forward value is the one-hot argmax (ties to the lowest
// index) and the backward pass uses the soft distribution (straight-through).
Tensor gumbel_softmax_rows(const Tensor& logits, double temperature, Rng& rng,
                           bool hard);

// ----- operator sugar --------------------------------------------------------

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(const Tensor& a, double s) { return scale(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }

}  // namespace msda::autodiff
