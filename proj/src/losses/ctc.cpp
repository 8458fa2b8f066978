// losses/ctc.cpp

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

#include "msda/losses/ctc.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace msda::losses {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = a > b ? a : b;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Blank-interleaved label sequence: blank, y0, blank, y1, ..., blank.
std::vector<int> extend_targets(std::span<const int> targets, int blank) {
  std::vector<int> ext(2 * targets.size() + 1, blank);
  for (std::size_t i = 0; i < targets.size(); ++i) ext[2 * i + 1] = targets[i];
  return ext;
}

void validate(std::span<const double> lp, int T, int V,
              std::span<const int> targets, int blank) {
  if (T < 1 || V < 2) {
    throw msda::ShapeError("ctc: log_probs must be [T x V] with T >= 1, V >= 2");
  }
  if (blank < 0 || blank >= V) {
    throw msda::ValueError("ctc: blank index " + std::to_string(blank) +
                           " outside vocabulary of size " + std::to_string(V));
  }
  for (int y : targets) {
    if (y < 0 || y >= V) {
      throw msda::ValueError("ctc: label " + std::to_string(y) +
                             " outside vocabulary of size " + std::to_string(V));
    }
    if (y == blank) throw msda::ValueError("ctc: label equals blank index");
  }
  for (double v : lp) {
    if (std::isnan(v)) throw msda::ValueError("ctc: NaN in log_probs");
  }
  const int need = ctc_min_frames(targets);
  if (T < need) {
    throw msda::AlignmentError("ctc: target of length " +
                               std::to_string(targets.size()) + " needs " +
                               std::to_string(need) + " frames, got " +
                               std::to_string(T));
  }
}

// Forward recursion. alpha[t*S + s] includes the emission at frame t.
double forward_alphas(std::span<const double> lp, int T, int V,
                      const std::vector<int>& ext, std::vector<double>* alpha) {
  const int S = static_cast<int>(ext.size());
  alpha->assign(static_cast<std::size_t>(T) * S, kNegInf);
  auto a = [&](int t, int s) -> double& {
    return (*alpha)[static_cast<std::size_t>(t) * S + s];
  };
  a(0, 0) = lp[static_cast<std::size_t>(ext[0])];
  if (S > 1) a(0, 1) = lp[static_cast<std::size_t>(ext[1])];
  for (int t = 1; t < T; ++t) {
    const double* row = lp.data() + static_cast<std::size_t>(t) * V;
    for (int s = 0; s < S; ++s) {
      double acc = a(t - 1, s);
      if (s >= 1) acc = log_add(acc, a(t - 1, s - 1));
      if (s >= 2 && ext[s] != ext[s - 2]) acc = log_add(acc, a(t - 1, s - 2));
      if (acc != kNegInf) a(t, s) = acc + row[ext[s]];
    }
  }
  double logp = a(T - 1, S - 1);
  if (S > 1) logp = log_add(logp, a(T - 1, S - 2));
  return logp;
}

}  // namespace

int ctc_min_frames(std::span<const int> targets) {
  int need = static_cast<int>(targets.size());
  for (std::size_t i = 1; i < targets.size(); ++i) {
    if (targets[i] == targets[i - 1]) ++need;
  }
  return need;
}

double ctc_loss_value(std::span<const double> log_probs, int T, int V,
                      std::span<const int> targets, int blank) {
  validate(log_probs, T, V, targets, blank);
  const std::vector<int> ext = extend_targets(targets, blank);
  std::vector<double> alpha;
  const double logp = forward_alphas(log_probs, T, V, ext, &alpha);
  if (!std::isfinite(logp)) {
    throw msda::ValueError("ctc: zero-probability alignment (log p = -inf)");
  }
  return -logp;
}

autodiff::Tensor ctc_loss(const autodiff::Tensor& log_probs,
                          std::span<const int> targets, int blank) {
  if (log_probs.rank() != 2) {
    throw msda::ShapeError("ctc: log_probs must be rank-2, got " +
                           autodiff::shape_str(log_probs.shape()));
  }
  const int T = log_probs.dim(0);
  const int V = log_probs.dim(1);
  validate(log_probs.value(), T, V, targets, blank);

  const std::vector<int> ext = extend_targets(targets, blank);
  const int S = static_cast<int>(ext.size());
  auto alpha = std::make_shared<std::vector<double>>();
  const double logp = forward_alphas(log_probs.value(), T, V, ext, &*alpha);
  if (!std::isfinite(logp)) {
    throw msda::ValueError("ctc: zero-probability alignment (log p = -inf)");
  }

  // d(-log p)/d lp[t][k] = -exp(LSE_{s: ext[s]=k}(alpha_t(s) + beta_t(s))
  //                              - lp[t][k] - log p),
  // with beta including the emission at frame t.
  auto backward = [alpha, ext, S, T, V, logp](autodiff::Node& self) {
    autodiff::Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    const double gy = self.grad[0];
    if (gy == 0.0) return;
    const std::vector<double>& lp = p.value;

    std::vector<double> beta(static_cast<std::size_t>(T) * S, kNegInf);
    auto b = [&](int t, int s) -> double& {
      return beta[static_cast<std::size_t>(t) * S + s];
    };
    auto a = [&](int t, int s) {
      return (*alpha)[static_cast<std::size_t>(t) * S + s];
    };
    auto lpv = [&](int t, int k) {
      return lp[static_cast<std::size_t>(t) * V + k];
    };
    b(T - 1, S - 1) = lpv(T - 1, ext[S - 1]);
    if (S > 1) b(T - 1, S - 2) = lpv(T - 1, ext[S - 2]);
    for (int t = T - 2; t >= 0; --t) {
      for (int s = S - 1; s >= 0; --s) {
        double acc = b(t + 1, s);
        if (s + 1 < S) acc = log_add(acc, b(t + 1, s + 1));
        if (s + 2 < S && ext[s] != ext[s + 2]) {
          acc = log_add(acc, b(t + 1, s + 2));
        }
        if (acc != kNegInf) b(t, s) = acc + lpv(t, ext[s]);
      }
    }

    std::vector<double> occ(static_cast<std::size_t>(V));
    for (int t = 0; t < T; ++t) {
      occ.assign(static_cast<std::size_t>(V), kNegInf);
      for (int s = 0; s < S; ++s) {
        const double ab = a(t, s) == kNegInf || b(t, s) == kNegInf
                              ? kNegInf
                              : a(t, s) + b(t, s);
        if (ab != kNegInf) occ[ext[s]] = log_add(occ[ext[s]], ab);
      }
      for (int k = 0; k < V; ++k) {
        if (occ[k] == kNegInf) continue;
        g[static_cast<std::size_t>(t) * V + k] -=
            gy * std::exp(occ[k] - lpv(t, k) - logp);
      }
    }
  };

  return autodiff::make_op("ctc_loss", {}, {-logp}, {log_probs},
                           std::move(backward));
}

}  // namespace msda::losses
