// autodiff/ops.cpp

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

#include "msda/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include "msda/kernels/kernels.hpp"

namespace msda::autodiff {
namespace {

const kernels::Ops& K() { return kernels::active(); }

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

std::pair<std::size_t, std::size_t> mat_dims(const char* op, const Tensor& x) {
  if (x.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected rank-2 tensor, got shape " +
                     shape_str(x.shape()));
  }
  return {static_cast<std::size_t>(x.dim(0)), static_cast<std::size_t>(x.dim(1))};
}

// grad += src over the parent's full extent, skipping parents that do not
// participate in the backward pass.
void acc_full(Node& parent, const double* src) {
  if (!parent.requires_grad) return;
  auto& g = parent.ensure_grad();
  K().add(g.data(), g.data(), src, g.size());
}

}  // namespace

// ----- creation ------------------------------------------------------------

Tensor zeros(Shape shape) {
  std::size_t n = shape_numel(shape);
  return Tensor::leaf(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor full(Shape shape, double v) {
  std::size_t n = shape_numel(shape);
  return Tensor::leaf(std::move(shape), std::vector<double>(n, v));
}

Tensor scalar(double v) { return Tensor::leaf({}, {v}); }

Tensor from_values(Shape shape, std::vector<double> v, bool requires_grad) {
  return Tensor::leaf(std::move(shape), std::move(v), requires_grad);
}

// ----- elementwise ----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  std::vector<double> out(a.numel());
  K().add(out.data(), a.value().data(), b.value().data(), out.size());
  return make_op("add", a.shape(), std::move(out), {a, b}, [](Node& self) {
    acc_full(*self.parents[0], self.grad.data());
    acc_full(*self.parents[1], self.grad.data());
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  std::vector<double> out(a.numel());
  K().sub(out.data(), a.value().data(), b.value().data(), out.size());
  return make_op("sub", a.shape(), std::move(out), {a, b}, [](Node& self) {
    acc_full(*self.parents[0], self.grad.data());
    Node& pb = *self.parents[1];
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      K().axpy(g.data(), -1.0, self.grad.data(), g.size());
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  std::vector<double> out(a.numel());
  K().mul(out.data(), a.value().data(), b.value().data(), out.size());
  return make_op("mul", a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const std::size_t n = self.value.size();
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[i] * pa.value[i];
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.numel());
  K().scale(out.data(), a.value().data(), s, out.size());
  return make_op("scale", a.shape(), std::move(out), {a}, [s](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    K().axpy(g.data(), s, self.grad.data(), g.size());
  });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.numel());
  auto av = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : 0.0;
  return make_op("relu", a.shape(), std::move(out), {a}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (p.value[i] > 0.0) g[i] += self.grad[i];
    }
  });
}

Tensor gelu(const Tensor& a) {
  std::vector<double> out(a.numel());
  auto av = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = 0.5 * av[i] * (1.0 + std::erf(av[i] * std::numbers::sqrt2 / 2.0));
  }
  return make_op("gelu", a.shape(), std::move(out), {a}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    constexpr double inv_sqrt_2pi = 0.3989422804014327;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = p.value[i];
      const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
      g[i] += self.grad[i] * (cdf + x * pdf);
    }
  });
}

Tensor exp(const Tensor& a) {
  std::vector<double> out(a.numel());
  auto av = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(av[i]);
  return make_op("exp", a.shape(), std::move(out), {a}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * self.value[i];
  });
}

Tensor xlogx(const Tensor& a) {
  std::vector<double> out(a.numel());
  auto av = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = av[i];
    if (x < 0.0) {
      throw ValueError("xlogx: negative input " + std::to_string(x));
    }
    out[i] = x > 0.0 ? x * std::log(x) : 0.0;
  }
  return make_op("xlogx", a.shape(), std::move(out), {a}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = p.value[i];
      if (x > 0.0) g[i] += self.grad[i] * (std::log(x) + 1.0);
    }
  });
}

Tensor add_n(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ValueError("add_n: no inputs");
  for (const Tensor& p : parts) check_same_shape("add_n", parts[0], p);
  std::vector<double> out(parts[0].numel(), 0.0);
  for (const Tensor& p : parts) {
    K().add(out.data(), out.data(), p.value().data(), out.size());
  }
  return make_op("add_n", parts[0].shape(), std::move(out), parts,
                 [](Node& self) {
                   for (auto& p : self.parents) acc_full(*p, self.grad.data());
                 });
}

Tensor add_rowvec(const Tensor& x, const Tensor& v) {
  auto [m, n] = mat_dims("add_rowvec", x);
  if (v.rank() != 1 || static_cast<std::size_t>(v.dim(0)) != n) {
    throw ShapeError("add_rowvec: vector shape " + shape_str(v.shape()) +
                     " does not match matrix " + shape_str(x.shape()));
  }
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < m; ++i) {
    K().add(out.data() + i * n, x.value().data() + i * n, v.value().data(), n);
  }
  return make_op("add_rowvec", x.shape(), std::move(out), {x, v},
                 [m = m, n = n](Node& self) {
                   acc_full(*self.parents[0], self.grad.data());
                   Node& pv = *self.parents[1];
                   if (!pv.requires_grad) return;
                   auto& g = pv.ensure_grad();
                   for (std::size_t i = 0; i < m; ++i) {
                     K().add(g.data(), g.data(), self.grad.data() + i * n, n);
                   }
                 });
}

// ----- linear algebra -------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  auto [m, ka] = mat_dims("matmul", a);
  auto [kb, n] = mat_dims("matmul", b);
  if (ka != kb) {
    throw ShapeError("matmul: inner dimensions disagree, " +
                     shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  std::vector<double> out(m * n);
  K().matmul_nn(out.data(), a.value().data(), b.value().data(), m, ka, n,
                false);
  const std::size_t k = ka;
  return make_op(
      "matmul", {static_cast<int>(m), static_cast<int>(n)}, std::move(out),
      {a, b}, [m = m, k, n = n](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        if (pa.requires_grad) {
          pa.ensure_grad();
          K().matmul_nt(pa.grad.data(), self.grad.data(), pb.value.data(), m,
                        n, k, true);
        }
        if (pb.requires_grad) {
          pb.ensure_grad();
          K().matmul_tn(pb.grad.data(), pa.value.data(), self.grad.data(), m,
                        k, n, true);
        }
      });
}

Tensor transpose(const Tensor& a) {
  auto [m, n] = mat_dims("transpose", a);
  std::vector<double> out(m * n);
  auto av = a.value();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  }
  return make_op("transpose", {static_cast<int>(n), static_cast<int>(m)},
                 std::move(out), {a}, [m = m, n = n](Node& self) {
                   Node& p = *self.parents[0];
                   if (!p.requires_grad) return;
                   auto& g = p.ensure_grad();
                   for (std::size_t i = 0; i < m; ++i) {
                     for (std::size_t j = 0; j < n; ++j) {
                       g[i * n + j] += self.grad[j * m + i];
                     }
                   }
                 });
}

Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias, int K_,
              int stride, int pad_left, int pad_right) {
  auto [t_in, c_in] = mat_dims("conv1d", x);
  auto [wr, c_out] = mat_dims("conv1d", weight);
  if (K_ < 1 || stride < 1 || pad_left < 0 || pad_right < 0) {
    throw ValueError("conv1d: bad kernel/stride/padding");
  }
  if (wr != static_cast<std::size_t>(K_) * c_in) {
    throw ShapeError("conv1d: weight shape " + shape_str(weight.shape()) +
                     " does not match kernel " + std::to_string(K_) +
                     " x channels " + std::to_string(c_in));
  }
  if (bias.rank() != 1 || static_cast<std::size_t>(bias.dim(0)) != c_out) {
    throw ShapeError("conv1d: bias shape " + shape_str(bias.shape()));
  }
  const std::size_t padded = t_in + pad_left + pad_right;
  if (padded < static_cast<std::size_t>(K_)) {
    throw ShapeError("conv1d: input too short for kernel");
  }
  const std::size_t t_out = (padded - K_) / stride + 1;
  const std::size_t cols = static_cast<std::size_t>(K_) * c_in;

  auto col = std::make_shared<std::vector<double>>(t_out * cols, 0.0);
  auto xv = x.value();
  for (std::size_t t = 0; t < t_out; ++t) {
    for (int k = 0; k < K_; ++k) {
      const long src = static_cast<long>(t) * stride - pad_left + k;
      if (src < 0 || src >= static_cast<long>(t_in)) continue;
      std::copy_n(xv.data() + static_cast<std::size_t>(src) * c_in, c_in,
                  col->data() + t * cols + static_cast<std::size_t>(k) * c_in);
    }
  }
  std::vector<double> out(t_out * c_out);
  K().matmul_nn(out.data(), col->data(), weight.value().data(), t_out, cols,
                c_out, false);
  for (std::size_t t = 0; t < t_out; ++t) {
    K().add(out.data() + t * c_out, out.data() + t * c_out,
            bias.value().data(), c_out);
  }
  return make_op(
      "conv1d", {static_cast<int>(t_out), static_cast<int>(c_out)},
      std::move(out), {x, weight, bias},
      [col, t_in = t_in, c_in = c_in, c_out = c_out, t_out, cols, K_, stride,
       pad_left](Node& self) {
        Node& px = *self.parents[0];
        Node& pw = *self.parents[1];
        Node& pb = *self.parents[2];
        if (pb.requires_grad) {
          auto& g = pb.ensure_grad();
          for (std::size_t t = 0; t < t_out; ++t) {
            K().add(g.data(), g.data(), self.grad.data() + t * c_out, c_out);
          }
        }
        if (pw.requires_grad) {
          pw.ensure_grad();
          K().matmul_tn(pw.grad.data(), col->data(), self.grad.data(), t_out,
                        cols, c_out, true);
        }
        if (px.requires_grad) {
          std::vector<double> dcol(t_out * cols);
          K().matmul_nt(dcol.data(), self.grad.data(), pw.value.data(), t_out,
                        c_out, cols, false);
          auto& g = px.ensure_grad();
          for (std::size_t t = 0; t < t_out; ++t) {
            for (int k = 0; k < K_; ++k) {
              const long src = static_cast<long>(t) * stride - pad_left + k;
              if (src < 0 || src >= static_cast<long>(t_in)) continue;
              K().add(g.data() + static_cast<std::size_t>(src) * c_in,
                      g.data() + static_cast<std::size_t>(src) * c_in,
                      dcol.data() + t * cols + static_cast<std::size_t>(k) * c_in,
                      c_in);
            }
          }
        }
      });
}

// ----- reductions -----------------------------------------------------------

Tensor sum(const Tensor& a) {
  const double v = K().sum(a.value().data(), a.numel());
  return make_op("sum", {}, {v}, {a}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    const double g0 = self.grad[0];
    for (double& gi : g) gi += g0;
  });
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw ValueError("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor sum_axis(const Tensor& a, int axis) {
  auto [m, n] = mat_dims("sum_axis", a);
  if (axis != 0 && axis != 1) throw ValueError("sum_axis: axis must be 0 or 1");
  auto av = a.value();
  if (axis == 0) {
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      K().add(out.data(), out.data(), av.data() + i * n, n);
    }
    return make_op("sum_axis", {static_cast<int>(n)}, std::move(out), {a},
                   [m = m, n = n](Node& self) {
                     Node& p = *self.parents[0];
                     if (!p.requires_grad) return;
                     auto& g = p.ensure_grad();
                     for (std::size_t i = 0; i < m; ++i) {
                       K().add(g.data() + i * n, g.data() + i * n,
                               self.grad.data(), n);
                     }
                   });
  }
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = K().sum(av.data() + i * n, n);
  return make_op("sum_axis", {static_cast<int>(m)}, std::move(out), {a},
                 [m = m, n = n](Node& self) {
                   Node& p = *self.parents[0];
                   if (!p.requires_grad) return;
                   auto& g = p.ensure_grad();
                   for (std::size_t i = 0; i < m; ++i) {
                     const double gi = self.grad[i];
                     for (std::size_t j = 0; j < n; ++j) g[i * n + j] += gi;
                   }
                 });
}

Tensor mean_axis(const Tensor& a, int axis) {
  auto [m, n] = mat_dims("mean_axis", a);
  const double denom = axis == 0 ? static_cast<double>(m) : static_cast<double>(n);
  return scale(sum_axis(a, axis), 1.0 / denom);
}

Tensor logsumexp(const Tensor& a) {
  auto av = a.value();
  if (av.empty()) throw ValueError("logsumexp: empty tensor");
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : av) {
    if (!std::isfinite(v)) throw ValueError("logsumexp: non-finite input");
    mx = std::max(mx, v);
  }
  double s = 0.0;
  std::vector<double> soft(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) {
    soft[i] = std::exp(av[i] - mx);
    s += soft[i];
  }
  for (double& v : soft) v /= s;
  const double out = mx + std::log(s);
  return make_op("logsumexp", {}, {out}, {a},
                 [soft = std::move(soft)](Node& self) {
                   Node& p = *self.parents[0];
                   if (!p.requires_grad) return;
                   auto& g = p.ensure_grad();
                   K().axpy(g.data(), self.grad[0], soft.data(), g.size());
                 });
}

// ----- row softmax family ---------------------------------------------------

Tensor softmax_rows(const Tensor& x) {
  auto [m, n] = mat_dims("softmax_rows", x);
  if (n == 0) throw ValueError("softmax_rows: empty rows");
  auto xv = x.value();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xv.data() + i * n;
    double mx = row[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    if (!std::isfinite(mx)) throw ValueError("softmax_rows: non-finite input");
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] = std::exp(row[j] - mx);
      s += out[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= s;
  }
  return make_op("softmax_rows", x.shape(), std::move(out), {x},
                 [m = m, n = n](Node& self) {
                   Node& p = *self.parents[0];
                   if (!p.requires_grad) return;
                   auto& g = p.ensure_grad();
                   for (std::size_t i = 0; i < m; ++i) {
                     const double* y = self.value.data() + i * n;
                     const double* gy = self.grad.data() + i * n;
                     const double dot = K().dot(gy, y, n);
                     for (std::size_t j = 0; j < n; ++j) {
                       g[i * n + j] += y[j] * (gy[j] - dot);
                     }
                   }
                 });
}

Tensor log_softmax_rows(const Tensor& x) {
  auto [m, n] = mat_dims("log_softmax_rows", x);
  if (n == 0) throw ValueError("log_softmax_rows: empty rows");
  auto xv = x.value();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xv.data() + i * n;
    double mx = row[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    if (!std::isfinite(mx)) {
      throw ValueError("log_softmax_rows: non-finite input");
    }
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::exp(row[j] - mx);
    const double lse = mx + std::log(s);
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = row[j] - lse;
  }
  return make_op("log_softmax_rows", x.shape(), std::move(out), {x},
                 [m = m, n = n](Node& self) {
                   Node& p = *self.parents[0];
                   if (!p.requires_grad) return;
                   auto& g = p.ensure_grad();
                   for (std::size_t i = 0; i < m; ++i) {
                     const double* y = self.value.data() + i * n;
                     const double* gy = self.grad.data() + i * n;
                     const double gsum = K().sum(gy, n);
                     for (std::size_t j = 0; j < n; ++j) {
                       g[i * n + j] += gy[j] - std::exp(y[j]) * gsum;
                     }
                   }
                 });
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias,
                       double eps) {
  auto [m, n] = mat_dims("layer_norm_rows", x);
  if (gain.rank() != 1 || static_cast<std::size_t>(gain.dim(0)) != n ||
      bias.rank() != 1 || static_cast<std::size_t>(bias.dim(0)) != n) {
    throw ShapeError("layer_norm_rows: gain/bias must be [n] for x " +
                     shape_str(x.shape()));
  }
  auto xv = x.value();
  auto gv = gain.value();
  auto bv = bias.value();
  auto xhat = std::make_shared<std::vector<double>>(m * n);
  auto inv_sigma = std::make_shared<std::vector<double>>(m);
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xv.data() + i * n;
    const double mu = K().sum(row, n) / static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = row[j] - mu;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_sigma)[i] = is;
    for (std::size_t j = 0; j < n; ++j) {
      const double xh = (row[j] - mu) * is;
      (*xhat)[i * n + j] = xh;
      out[i * n + j] = gv[j] * xh + bv[j];
    }
  }
  return make_op(
      "layer_norm_rows", x.shape(), std::move(out), {x, gain, bias},
      [xhat, inv_sigma, m = m, n = n](Node& self) {
        Node& px = *self.parents[0];
        Node& pg = *self.parents[1];
        Node& pb = *self.parents[2];
        const double dn = static_cast<double>(n);
        for (std::size_t i = 0; i < m; ++i) {
          const double* gy = self.grad.data() + i * n;
          const double* xh = xhat->data() + i * n;
          if (pg.requires_grad) {
            auto& gg = pg.ensure_grad();
            for (std::size_t j = 0; j < n; ++j) gg[j] += gy[j] * xh[j];
          }
          if (pb.requires_grad) {
            auto& gb = pb.ensure_grad();
            K().add(gb.data(), gb.data(), gy, n);
          }
          if (px.requires_grad) {
            auto& gx = px.ensure_grad();
            const double* gains = pg.value.data();
            double mean_dx = 0.0;
            double mean_dxx = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              const double dxh = gy[j] * gains[j];
              mean_dx += dxh;
              mean_dxx += dxh * xh[j];
            }
            mean_dx /= dn;
            mean_dxx /= dn;
            const double is = (*inv_sigma)[i];
            for (std::size_t j = 0; j < n; ++j) {
              const double dxh = gy[j] * gains[j];
              gx[i * n + j] += is * (dxh - mean_dx - xh[j] * mean_dxx);
            }
          }
        }
      });
}

// ----- structure ------------------------------------------------------------

Tensor vstack(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw ValueError("vstack: no rows");
  const std::size_t n = rows[0].numel();
  for (const Tensor& r : rows) {
    if (r.rank() != 1 || r.numel() != n) {
      throw ShapeError("vstack: all rows must be rank-1 of equal length");
    }
  }
  const std::size_t m = rows.size();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(rows[i].value().data(), n, out.data() + i * n);
  }
  return make_op("vstack", {static_cast<int>(m), static_cast<int>(n)},
                 std::move(out), rows, [n](Node& self) {
                   for (std::size_t i = 0; i < self.parents.size(); ++i) {
                     Node& p = *self.parents[i];
                     if (!p.requires_grad) continue;
                     auto& g = p.ensure_grad();
                     K().add(g.data(), g.data(), self.grad.data() + i * n, n);
                   }
                 });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ValueError("concat_cols: no inputs");
  auto [m, n0] = mat_dims("concat_cols", parts[0]);
  (void)n0;
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    auto [mi, ni] = mat_dims("concat_cols", p);
    if (mi != m) throw ShapeError("concat_cols: row counts differ");
    total += ni;
  }
  std::vector<double> out(m * total);
  std::size_t off = 0;
  std::vector<std::size_t> offs;
  std::vector<std::size_t> widths;
  for (const Tensor& p : parts) {
    const std::size_t ni = static_cast<std::size_t>(p.dim(1));
    offs.push_back(off);
    widths.push_back(ni);
    for (std::size_t i = 0; i < m; ++i) {
      std::copy_n(p.value().data() + i * ni, ni,
                  out.data() + i * total + off);
    }
    off += ni;
  }
  return make_op("concat_cols", {static_cast<int>(m), static_cast<int>(total)},
                 std::move(out), parts,
                 [m = m, total, offs = std::move(offs),
                  widths = std::move(widths)](Node& self) {
                   for (std::size_t pi = 0; pi < self.parents.size(); ++pi) {
                     Node& p = *self.parents[pi];
                     if (!p.requires_grad) continue;
                     auto& g = p.ensure_grad();
                     const std::size_t ni = widths[pi];
                     for (std::size_t i = 0; i < m; ++i) {
                       K().add(g.data() + i * ni, g.data() + i * ni,
                               self.grad.data() + i * total + offs[pi], ni);
                     }
                   }
                 });
}

Tensor slice_rows(const Tensor& x, int r0, int len) {
  auto [m, n] = mat_dims("slice_rows", x);
  if (r0 < 0 || len < 1 || static_cast<std::size_t>(r0 + len) > m) {
    throw ShapeError("slice_rows: range [" + std::to_string(r0) + ", " +
                     std::to_string(r0 + len) + ") out of bounds for " +
                     shape_str(x.shape()));
  }
  std::vector<double> out(static_cast<std::size_t>(len) * n);
  std::copy_n(x.value().data() + static_cast<std::size_t>(r0) * n, out.size(),
              out.data());
  return make_op("slice_rows", {len, static_cast<int>(n)}, std::move(out), {x},
                 [r0, n = n](Node& self) {
                   Node& p = *self.parents[0];
                   if (!p.requires_grad) return;
                   auto& g = p.ensure_grad();
                   K().add(g.data() + static_cast<std::size_t>(r0) * n,
                           g.data() + static_cast<std::size_t>(r0) * n,
                           self.grad.data(), self.grad.size());
                 });
}

Tensor slice_cols(const Tensor& x, int c0, int len) {
  auto [m, n] = mat_dims("slice_cols", x);
  if (c0 < 0 || len < 1 || static_cast<std::size_t>(c0 + len) > n) {
    throw ShapeError("slice_cols: range [" + std::to_string(c0) + ", " +
                     std::to_string(c0 + len) + ") out of bounds for " +
                     shape_str(x.shape()));
  }
  std::vector<double> out(m * static_cast<std::size_t>(len));
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(x.value().data() + i * n + c0, len, out.data() + i * len);
  }
  return make_op("slice_cols", {static_cast<int>(m), len}, std::move(out), {x},
                 [c0, len, m = m, n = n](Node& self) {
                   Node& p = *self.parents[0];
                   if (!p.requires_grad) return;
                   auto& g = p.ensure_grad();
                   for (std::size_t i = 0; i < m; ++i) {
                     K().add(g.data() + i * n + c0, g.data() + i * n + c0,
                             self.grad.data() + i * len, len);
                   }
                 });
}

Tensor gather_rows(const Tensor& x, const std::vector<int>& indices) {
  auto [m, n] = mat_dims("gather_rows", x);
  if (indices.empty()) throw ValueError("gather_rows: no indices");
  for (int r : indices) {
    if (r < 0 || static_cast<std::size_t>(r) >= m) {
      throw ShapeError("gather_rows: index " + std::to_string(r) +
                       " out of range for " + shape_str(x.shape()));
    }
  }
  std::vector<double> out(indices.size() * n);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::copy_n(x.value().data() + static_cast<std::size_t>(indices[i]) * n, n,
                out.data() + i * n);
  }
  return make_op("gather_rows",
                 {static_cast<int>(indices.size()), static_cast<int>(n)},
                 std::move(out), {x}, [indices, n = n](Node& self) {
                   Node& p = *self.parents[0];
                   if (!p.requires_grad) return;
                   auto& g = p.ensure_grad();
                   for (std::size_t i = 0; i < indices.size(); ++i) {
                     K().add(g.data() + static_cast<std::size_t>(indices[i]) * n,
                             g.data() + static_cast<std::size_t>(indices[i]) * n,
                             self.grad.data() + i * n, n);
                   }
                 });
}

Tensor replace_rows(const Tensor& x, const std::vector<int>& indices,
                    const Tensor& row) {
  auto [m, n] = mat_dims("replace_rows", x);
  if (row.rank() != 1 || static_cast<std::size_t>(row.dim(0)) != n) {
    throw ShapeError("replace_rows: row shape " + shape_str(row.shape()) +
                     " does not match matrix " + shape_str(x.shape()));
  }
  int prev = -1;
  for (int r : indices) {
    if (r < 0 || static_cast<std::size_t>(r) >= m) {
      throw ShapeError("replace_rows: index " + std::to_string(r) +
                       " out of range for " + shape_str(x.shape()));
    }
    if (r <= prev) {
      throw ValueError("replace_rows: indices must be strictly increasing");
    }
    prev = r;
  }
  std::vector<double> out(x.value().begin(), x.value().end());
  for (int r : indices) {
    std::copy_n(row.value().data(), n,
                out.data() + static_cast<std::size_t>(r) * n);
  }
  return make_op(
      "replace_rows", x.shape(), std::move(out), {x, row},
      [indices, m = m, n = n](Node& self) {
        Node& px = *self.parents[0];
        Node& pr = *self.parents[1];
        if (px.requires_grad) {
          auto& g = px.ensure_grad();
          std::size_t next = 0;
          for (std::size_t i = 0; i < m; ++i) {
            if (next < indices.size() &&
                static_cast<std::size_t>(indices[next]) == i) {
              ++next;
              continue;
            }
            K().add(g.data() + i * n, g.data() + i * n,
                    self.grad.data() + i * n, n);
          }
        }
        if (pr.requires_grad) {
          auto& g = pr.ensure_grad();
          for (int r : indices) {
            K().add(g.data(), g.data(),
                    self.grad.data() + static_cast<std::size_t>(r) * n, n);
          }
        }
      });
}

Tensor at_index(const Tensor& x, int i) {
  if (x.rank() != 1) {
    throw ShapeError("at_index: expected rank-1 tensor, got " +
                     shape_str(x.shape()));
  }
  if (i < 0 || i >= x.dim(0)) {
    throw ShapeError("at_index: index " + std::to_string(i) +
                     " out of range for " + shape_str(x.shape()));
  }
  return make_op("at_index", {}, {x.value()[static_cast<std::size_t>(i)]}, {x},
                 [i](Node& self) {
                   Node& p = *self.parents[0];
                   if (!p.requires_grad) return;
                   p.ensure_grad()[static_cast<std::size_t>(i)] += self.grad[0];
                 });
}

// ----- similarity and sampling ---------------------------------------------

Tensor cosine_rows(const Tensor& a, const Tensor& b) {
  check_same_shape("cosine_rows", a, b);
  auto [m, n] = mat_dims("cosine_rows", a);
  auto av = a.value();
  auto bv = b.value();
  auto norms_a = std::make_shared<std::vector<double>>(m);
  auto norms_b = std::make_shared<std::vector<double>>(m);
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double* ra = av.data() + i * n;
    const double* rb = bv.data() + i * n;
    const double na = std::sqrt(K().dot(ra, ra, n));
    const double nb = std::sqrt(K().dot(rb, rb, n));
    if (na == 0.0 || nb == 0.0) {
      throw ValueError("cosine_rows: zero-norm row " + std::to_string(i));
    }
    (*norms_a)[i] = na;
    (*norms_b)[i] = nb;
    out[i] = K().dot(ra, rb, n) / (na * nb);
  }
  return make_op(
      "cosine_rows", {static_cast<int>(m)}, std::move(out), {a, b},
      [norms_a, norms_b, m = m, n = n](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        for (std::size_t i = 0; i < m; ++i) {
          const double gy = self.grad[i];
          if (gy == 0.0) continue;
          const double* ra = pa.value.data() + i * n;
          const double* rb = pb.value.data() + i * n;
          const double na = (*norms_a)[i];
          const double nb = (*norms_b)[i];
          const double c = self.value[i];
          if (pa.requires_grad) {
            auto& g = pa.ensure_grad();
            const double s1 = gy / (na * nb);
            const double s2 = gy * c / (na * na);
            for (std::size_t j = 0; j < n; ++j) {
              g[i * n + j] += s1 * rb[j] - s2 * ra[j];
            }
          }
          if (pb.requires_grad) {
            auto& g = pb.ensure_grad();
            const double s1 = gy / (na * nb);
            const double s2 = gy * c / (nb * nb);
            for (std::size_t j = 0; j < n; ++j) {
              g[i * n + j] += s1 * ra[j] - s2 * rb[j];
            }
          }
        }
      });
}

Tensor gumbel_softmax_rows(const Tensor& logits, double temperature, Rng& rng,
                           bool hard) {
  auto [m, n] = mat_dims("gumbel_softmax_rows", logits);
  if (n == 0) throw ValueError("gumbel_softmax_rows: empty rows");
  if (!(temperature > 0.0)) {
    throw ValueError("gumbel_softmax_rows: temperature must be positive, got " +
                     std::to_string(temperature));
  }
  auto lv = logits.value();
  for (double v : lv) {
    if (!std::isfinite(v)) {
      throw ValueError("gumbel_softmax_rows: non-finite logits");
    }
  }
  auto soft = std::make_shared<std::vector<double>>(m * n);
  std::vector<double> out(m * n, 0.0);
  std::vector<double> z(n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double u = rng.uniform();
      if (u <= 0.0) u = 1e-300;
      const double gnoise = -std::log(-std::log(u));
      z[j] = (lv[i * n + j] + gnoise) / temperature;
    }
    double mx = z[0];
    std::size_t arg = 0;
    for (std::size_t j = 1; j < n; ++j) {
      if (z[j] > mx) {
        mx = z[j];
        arg = j;
      }
    }
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      (*soft)[i * n + j] = std::exp(z[j] - mx);
      s += (*soft)[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) (*soft)[i * n + j] /= s;
    if (hard) {
      out[i * n + arg] = 1.0;
    } else {
      std::copy_n(soft->data() + i * n, n, out.data() + i * n);
    }
  }
  return make_op("gumbel_softmax_rows", logits.shape(), std::move(out),
                 {logits}, [soft, temperature, m = m, n = n](Node& self) {
                   Node& p = *self.parents[0];
                   if (!p.requires_grad) return;
                   auto& g = p.ensure_grad();
                   for (std::size_t i = 0; i < m; ++i) {
                     const double* y = soft->data() + i * n;
                     const double* gy = self.grad.data() + i * n;
                     const double dot = K().dot(gy, y, n);
                     for (std::size_t j = 0; j < n; ++j) {
                       g[i * n + j] += y[j] * (gy[j] - dot) / temperature;
                     }
                   }
                 });
}

}  // namespace msda::autodiff
