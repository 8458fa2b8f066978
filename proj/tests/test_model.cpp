// tests/test_model.cpp

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
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "msda/autodiff/ops.hpp"
#include "msda/error.hpp"
#include "msda/model/model.hpp"
#include "msda/rng.hpp"

using namespace msda;
namespace ad = msda::autodiff;

namespace {

model::ModelConfig tiny_cfg() {
  model::ModelConfig cfg;
  cfg.input_channels = 4;
  cfg.encoder_dim = 8;
  cfg.context_layers = 1;
  cfg.attention_heads = 2;
  cfg.ffn_dim = 16;
  cfg.codebook_groups = 2;
  cfg.codebook_entries = 4;
  cfg.codevector_dim = 8;
  cfg.vocab_size = 5;
  return cfg;
}

std::vector<double> random_features(int frames, int channels, Rng& rng) {
  std::vector<double> x(static_cast<std::size_t>(frames) * channels);
  for (double& v : x) v = rng.normal();
  return x;
}

}  // namespace

TEST_CASE("output shapes follow the config") {
  auto cfg = tiny_cfg();
  auto params = model::init_params(cfg, Rng(11));
  Rng frng(3);
  const int T = 13;
  auto feats = random_features(T, cfg.input_channels, frng);
  model::ForwardOptions opts;
  opts.compute_quantized = true;
  opts.apply_masking = true;
  auto out = model::forward_utterance(params, feats, T, cfg.input_channels,
                                      opts, Rng(5));
  CHECK(out.frames_out == cfg.frames_out(T));
  CHECK(out.frames_out == (T + cfg.downsample_factor - 1) / cfg.downsample_factor);
  REQUIRE(out.ctc_log_probs.node() != nullptr);
  CHECK(out.ctc_log_probs.value().size() ==
        static_cast<std::size_t>(out.frames_out) * cfg.vocab_size);
  CHECK(out.context_proj.value().size() ==
        static_cast<std::size_t>(out.frames_out) * cfg.codevector_dim);
  CHECK(out.quantized.value().size() ==
        static_cast<std::size_t>(out.frames_out) * cfg.codevector_dim);
  CHECK(out.codebook_probs.value().size() ==
        static_cast<std::size_t>(cfg.codebook_groups) * cfg.codebook_entries);
  // Log-prob rows normalize.
  for (int t = 0; t < out.frames_out; ++t) {
    double s = 0.0;
    for (int v = 0; v < cfg.vocab_size; ++v) {
      s += std::exp(out.ctc_log_probs.value()[static_cast<std::size_t>(t) *
                                                  cfg.vocab_size +
                                              v]);
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
  }
  // Codebook probability rows normalize and are non-negative.
  for (int g = 0; g < cfg.codebook_groups; ++g) {
    double s = 0.0;
    for (int v = 0; v < cfg.codebook_entries; ++v) {
      const double p = out.codebook_probs.value()[static_cast<std::size_t>(g) *
                                                      cfg.codebook_entries +
                                                  v];
      CHECK(p >= 0.0);
      s += p;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
  }
  // Masked indices are sorted, unique, in range.
  CHECK(!out.masked.empty());
  CHECK(std::is_sorted(out.masked.begin(), out.masked.end()));
  CHECK(std::adjacent_find(out.masked.begin(), out.masked.end()) ==
        out.masked.end());
  for (int m : out.masked) {
    CHECK(m >= 0);
    CHECK(m < out.frames_out);
  }
}

TEST_CASE("forward is deterministic in the rng identity") {
  auto cfg = tiny_cfg();
  auto params = model::init_params(cfg, Rng(11));
  Rng frng(3);
  const int T = 10;
  auto feats = random_features(T, cfg.input_channels, frng);
  model::ForwardOptions opts;
  opts.apply_masking = true;
  opts.compute_quantized = true;
  augment::SpecAugmentConfig sa;
  opts.specaugment = &sa;
  auto a = model::forward_utterance(params, feats, T, cfg.input_channels, opts,
                                    Rng(42));
  auto b = model::forward_utterance(params, feats, T, cfg.input_channels, opts,
                                    Rng(42));
  CHECK(std::equal(a.ctc_log_probs.value().begin(), a.ctc_log_probs.value().end(),
                   b.ctc_log_probs.value().begin()));
  CHECK(a.masked == b.masked);
  auto c = model::forward_utterance(params, feats, T, cfg.input_channels, opts,
                                    Rng(43));
  bool same = std::equal(a.ctc_log_probs.value().begin(),
                         a.ctc_log_probs.value().end(),
                         c.ctc_log_probs.value().begin()) &&
              a.masked == c.masked;
  CHECK_FALSE(same);
}

TEST_CASE("clean forward ignores the rng") {
  auto cfg = tiny_cfg();
  auto params = model::init_params(cfg, Rng(11));
  Rng frng(3);
  const int T = 9;
  auto feats = random_features(T, cfg.input_channels, frng);
  model::ForwardOptions opts;  // no masking, no augment, no quantizer noise
  auto a = model::forward_utterance(params, feats, T, cfg.input_channels, opts,
                                    Rng(1));
  auto b = model::forward_utterance(params, feats, T, cfg.input_channels, opts,
                                    Rng(2));
  CHECK(std::equal(a.ctc_log_probs.value().begin(), a.ctc_log_probs.value().end(),
                   b.ctc_log_probs.value().begin()));
  CHECK(a.masked.empty());
}

TEST_CASE("initial head is near uniform") {
  // A freshly initialized model should not be confidently wrong: its output
  // distribution stays close to uniform so CTC training starts stable.
  auto cfg = tiny_cfg();
  auto params = model::init_params(cfg, Rng(7));
  Rng frng(5);
  const int T = 12;
  auto feats = random_features(T, cfg.input_channels, frng);
  auto out = model::forward_utterance(params, feats, T, cfg.input_channels, {},
                                      Rng(0));
  const double uniform = -std::log(static_cast<double>(cfg.vocab_size));
  for (double lp : out.ctc_log_probs.value()) {
    CHECK(std::fabs(lp - uniform) < 1.0);
  }
}

TEST_CASE("params clone is deep") {
  auto cfg = tiny_cfg();
  auto params = model::init_params(cfg, Rng(11));
  auto copy = params.clone();
  REQUIRE(copy.tensors.size() == params.tensors.size());
  CHECK(copy.parameter_count() == params.parameter_count());
  auto& t = copy.tensors.begin()->second;
  t.value_mut()[0] += 1.0;
  const auto& orig = params.tensors.begin()->second;
  CHECK(orig.value()[0] != t.value()[0]);
}

TEST_CASE("gumbel temperature anneals and floors") {
  auto cfg = tiny_cfg();
  cfg.gumbel_temp_start = 2.0;
  cfg.gumbel_temp_end = 0.5;
  cfg.gumbel_temp_decay = 0.9;
  CHECK(model::gumbel_temperature(cfg, 0) == doctest::Approx(2.0));
  CHECK(model::gumbel_temperature(cfg, 1) == doctest::Approx(1.8));
  CHECK(model::gumbel_temperature(cfg, 5) ==
        doctest::Approx(2.0 * std::pow(0.9, 5)));
  CHECK(model::gumbel_temperature(cfg, 100000) == doctest::Approx(0.5));
  // Monotone non-increasing.
  double prev = model::gumbel_temperature(cfg, 0);
  for (long s = 1; s < 200; ++s) {
    const double cur = model::gumbel_temperature(cfg, s);
    CHECK(cur <= prev + 1e-15);
    prev = cur;
  }
}

TEST_CASE("mask sampling obeys probability and span settings") {
  Rng rng(19);
  const int frames = 40;
  auto idx = model::sample_mask_indices(frames, 0.5, 2, rng);
  CHECK(!idx.empty());
  CHECK(std::is_sorted(idx.begin(), idx.end()));
  for (int i : idx) {
    CHECK(i >= 0);
    CHECK(i < frames);
  }
  // mask_prob 0 means no masking.
  auto none = model::sample_mask_indices(frames, 0.0, 2, rng);
  CHECK(none.empty());
  // Short inputs still produce at least one span, clipped to range.
  auto tinyseq = model::sample_mask_indices(1, 0.9, 3, rng);
  CHECK(!tinyseq.empty());
  for (int i : tinyseq) CHECK(i == 0);
}

TEST_CASE("distractor sampling draws from other masked positions") {
  Rng rng(23);
  std::vector<int> masked = {2, 5, 9, 11};
  auto d = model::sample_distractors(masked, 3, rng);
  REQUIRE(d.size() == masked.size());
  for (std::size_t i = 0; i < masked.size(); ++i) {
    REQUIRE(d[i].size() == 3);
    for (int cand : d[i]) {
      CHECK(cand != masked[i]);
      CHECK(std::find(masked.begin(), masked.end(), cand) != masked.end());
    }
  }
  // k = 0 is fine even for a single masked position.
  auto empty = model::sample_distractors({4}, 0, rng);
  REQUIRE(empty.size() == 1);
  CHECK(empty[0].empty());
  // A single masked position cannot supply distractors.
  CHECK_THROWS_AS(model::sample_distractors({4}, 2, rng), ValueError);
}

TEST_CASE("time shift of input shifts encoder output rows") {
  // With stride matching the shift and no position encoding, shifting the
  // input by one stride shifts the representation by one row; the model has
  // no absolute-position channel aside from the optional encoding.
  auto cfg = tiny_cfg();
  cfg.position_encoding = "none";
  cfg.context_layers = 0;
  auto params = model::init_params(cfg, Rng(31));
  Rng frng(9);
  const int T = 20;
  const int stride = cfg.downsample_factor;
  auto base = random_features(T, cfg.input_channels, frng);
  // Prepend one stride worth of copies of the first frame, drop the tail.
  std::vector<double> shifted(base.size());
  for (int t = 0; t < T; ++t) {
    const int src = std::max(0, t - stride);
    std::copy_n(base.begin() + static_cast<std::ptrdiff_t>(src) * cfg.input_channels,
                cfg.input_channels,
                shifted.begin() + static_cast<std::ptrdiff_t>(t) * cfg.input_channels);
  }
  auto a = model::forward_utterance(params, base, T, cfg.input_channels, {},
                                    Rng(0));
  auto b = model::forward_utterance(params, shifted, T, cfg.input_channels, {},
                                    Rng(0));
  // Row r of the shifted output matches row r-1 of the base output away from
  // the padded boundaries; the two stacked kernel-3 convolutions give each
  // output row a receptive field of two rows on either side.
  const int V = cfg.vocab_size;
  for (int r = 3; r <= a.frames_out - 2; ++r) {
    for (int v = 0; v < V; ++v) {
      const double x = a.ctc_log_probs.value()[static_cast<std::size_t>(r - 1) * V + v];
      const double y = b.ctc_log_probs.value()[static_cast<std::size_t>(r) * V + v];
      CHECK(std::fabs(x - y) < 1e-6);
    }
  }
}

TEST_CASE("input validation") {
  auto cfg = tiny_cfg();
  auto params = model::init_params(cfg, Rng(11));
  std::vector<double> feats(4 * cfg.input_channels, 0.0);
  CHECK_THROWS_AS(model::forward_utterance(params, feats, 5, cfg.input_channels,
                                           {}, Rng(0)),
                  ShapeError);
  CHECK_THROWS_AS(model::forward_utterance(params, feats, 4,
                                           cfg.input_channels + 1, {}, Rng(0)),
                  ShapeError);
  model::ModelConfig bad = cfg;
  bad.vocab_size = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  model::ModelConfig bad2 = cfg;
  bad2.encoder_dim = 7;  // not divisible by attention heads
  CHECK_THROWS_AS(bad2.validate(), ConfigError);
  // Gumbel noise needs a positive temperature.
  model::ForwardOptions opts;
  opts.apply_masking = true;
  opts.compute_quantized = true;
  opts.gumbel_temperature = 0.0;
  CHECK_THROWS_AS(model::forward_utterance(params, feats, 4, cfg.input_channels,
                                           opts, Rng(0)),
                  ValueError);
}
