// model/model.cpp

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

#include "msda/model/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "msda/error.hpp"

namespace msda::model {

namespace ad = msda::autodiff;

void ModelConfig::validate() const {
  if (input_channels < 1 || encoder_dim < 1 || ffn_dim < 1 ||
      context_layers < 0 || conv_kernel < 1) {
    throw ConfigError("model: dimensions must be positive");
  }
  if (downsample_factor < 1) {
    throw ConfigError("model: downsample_factor must be >= 1");
  }
  if (attention_heads < 1 || encoder_dim % attention_heads != 0) {
    throw ConfigError("model: encoder_dim must divide evenly into heads");
  }
  if (codebook_groups < 1 || codebook_entries < 2 ||
      codevector_dim % codebook_groups != 0) {
    throw ConfigError(
        "model: codevector_dim must divide evenly into codebook groups");
  }
  if (vocab_size < 2) {
    throw ConfigError("model: vocab_size must include blank plus labels");
  }
  if (mask_prob < 0.0 || mask_prob > 1.0 || mask_span < 1) {
    throw ConfigError("model: mask_prob in [0,1], mask_span >= 1");
  }
  if (num_distractors < 0 || !(contrastive_temp > 0.0)) {
    throw ConfigError("model: bad contrastive settings");
  }
  if (!(gumbel_temp_start >= gumbel_temp_end) || !(gumbel_temp_end > 0.0) ||
      !(gumbel_temp_decay > 0.0) || gumbel_temp_decay > 1.0) {
    throw ConfigError("model: bad gumbel temperature schedule");
  }
  if (position_encoding != "sinusoidal" && position_encoding != "none") {
    throw ConfigError("model: position_encoding must be sinusoidal or none");
  }
}

int ModelConfig::frames_out(int frames_in) const {
  return (frames_in + downsample_factor - 1) / downsample_factor;
}

double gumbel_temperature(const ModelConfig& cfg, long step) {
  const double t = cfg.gumbel_temp_start *
                   std::pow(cfg.gumbel_temp_decay, static_cast<double>(step));
  return std::max(t, cfg.gumbel_temp_end);
}

Params Params::clone() const {
  Params out;
  out.config = config;
  for (const auto& [name, t] : tensors) {
    out.tensors.emplace(name,
                        ad::Tensor::leaf(t.shape(),
                                         {t.value().begin(), t.value().end()},
                                         true));
  }
  return out;
}

void Params::zero_grads() const {
  for (const auto& [name, t] : tensors) {
    (void)name;
    const_cast<ad::Tensor&>(t).zero_grad();
  }
}

std::size_t Params::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors) {
    (void)name;
    n += t.numel();
  }
  return n;
}

namespace {

ad::Tensor init_matrix(const Rng& rng, const std::string& name, int rows,
                       int cols, double scale) {
  Rng r = rng.derive("init").derive(name);
  std::vector<double> v(static_cast<std::size_t>(rows) * cols);
  const double stddev = scale / std::sqrt(static_cast<double>(rows));
  for (double& x : v) x = stddev * r.normal();
  return ad::Tensor::leaf({rows, cols}, std::move(v), true);
}

ad::Tensor init_vector(const Rng& rng, const std::string& name, int n,
                       double stddev, double fill_mean = 0.0) {
  Rng r = rng.derive("init").derive(name);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = fill_mean + (stddev > 0.0 ? stddev * r.normal() : 0.0);
  return ad::Tensor::leaf({n}, std::move(v), true);
}

std::vector<double> sinusoidal_encoding(int frames, int dim) {
  std::vector<double> pe(static_cast<std::size_t>(frames) * dim, 0.0);
  for (int t = 0; t < frames; ++t) {
    for (int i = 0; i < dim; i += 2) {
      const double angle =
          t / std::pow(10000.0, static_cast<double>(i) / dim);
      pe[static_cast<std::size_t>(t) * dim + i] = std::sin(angle);
      if (i + 1 < dim) {
        pe[static_cast<std::size_t>(t) * dim + i + 1] = std::cos(angle);
      }
    }
  }
  return pe;
}

}  // namespace

Params init_params(const ModelConfig& cfg, const Rng& rng) {
  cfg.validate();
  Params p;
  p.config = cfg;
  const int d = cfg.encoder_dim;
  const int k = cfg.conv_kernel;
  const int gv = cfg.codebook_groups * cfg.codebook_entries;
  const int cv = cfg.codevector_dim;

  auto put = [&](const std::string& name, ad::Tensor t) {
    p.tensors.emplace(name, std::move(t));
  };

  put("conv0.weight", init_matrix(rng, "conv0.weight", k * cfg.input_channels, d, 1.0));
  put("conv0.bias", init_vector(rng, "conv0.bias", d, 0.0));
  put("conv1.weight", init_matrix(rng, "conv1.weight", k * d, d, 1.0));
  put("conv1.bias", init_vector(rng, "conv1.bias", d, 0.0));
  put("encoder_ln.gain", init_vector(rng, "encoder_ln.gain", d, 0.0, 1.0));
  put("encoder_ln.bias", init_vector(rng, "encoder_ln.bias", d, 0.0));
  put("mask_embedding", init_vector(rng, "mask_embedding", d, 0.1));

  put("quantizer.weight", init_matrix(rng, "quantizer.weight", d, gv, 1.0));
  put("quantizer.bias", init_vector(rng, "quantizer.bias", gv, 0.0));
  for (int g = 0; g < cfg.codebook_groups; ++g) {
    const std::string name = "quantizer.codebook" + std::to_string(g);
    put(name, init_matrix(rng, name, cfg.codebook_entries,
                          cv / cfg.codebook_groups, 1.0));
  }
  put("proj.weight", init_matrix(rng, "proj.weight", d, cv, 1.0));
  put("proj.bias", init_vector(rng, "proj.bias", cv, 0.0));

  for (int l = 0; l < cfg.context_layers; ++l) {
    const std::string pre = "layer" + std::to_string(l) + ".";
    put(pre + "ln1.gain", init_vector(rng, pre + "ln1.gain", d, 0.0, 1.0));
    put(pre + "ln1.bias", init_vector(rng, pre + "ln1.bias", d, 0.0));
    for (const char* w : {"wq", "wk", "wv", "wo"}) {
      put(pre + "attn." + w, init_matrix(rng, pre + "attn." + w, d, d, 1.0));
    }
    for (const char* b : {"bq", "bk", "bv", "bo"}) {
      put(pre + "attn." + b, init_vector(rng, pre + "attn." + b, d, 0.0));
    }
    put(pre + "ln2.gain", init_vector(rng, pre + "ln2.gain", d, 0.0, 1.0));
    put(pre + "ln2.bias", init_vector(rng, pre + "ln2.bias", d, 0.0));
    put(pre + "ffn.w1", init_matrix(rng, pre + "ffn.w1", d, cfg.ffn_dim, 1.0));
    put(pre + "ffn.b1", init_vector(rng, pre + "ffn.b1", cfg.ffn_dim, 0.0));
    put(pre + "ffn.w2", init_matrix(rng, pre + "ffn.w2", cfg.ffn_dim, d, 1.0));
    put(pre + "ffn.b2", init_vector(rng, pre + "ffn.b2", d, 0.0));
  }
  put("final_ln.gain", init_vector(rng, "final_ln.gain", d, 0.0, 1.0));
  put("final_ln.bias", init_vector(rng, "final_ln.bias", d, 0.0));

  // The CTC head starts small so initial outputs sit near the uniform
  // distribution, which keeps early training stable.
  put("head.weight", init_matrix(rng, "head.weight", d, cfg.vocab_size, 0.1));
  put("head.bias", init_vector(rng, "head.bias", cfg.vocab_size, 0.0));
  return p;
}

std::vector<int> sample_mask_indices(int frames, double mask_prob, int span,
                                     Rng& rng) {
  if (frames < 1) throw ValueError("sample_mask_indices: no frames");
  if (mask_prob < 0.0 || mask_prob > 1.0 || span < 1) {
    throw ValueError("sample_mask_indices: bad mask parameters");
  }
  if (mask_prob == 0.0) return {};
  const int starts_avail = std::max(1, frames - span + 1);
  int num_spans = static_cast<int>(
      std::lround(mask_prob * static_cast<double>(frames) / span));
  num_spans = std::max(1, std::min(num_spans, starts_avail));
  const auto picks = rng.sample_without_replacement(
      static_cast<std::size_t>(starts_avail),
      static_cast<std::size_t>(num_spans));
  std::set<int> masked;
  for (std::size_t s : picks) {
    for (int off = 0; off < span; ++off) {
      const int t = static_cast<int>(s) + off;
      if (t < frames) masked.insert(t);
    }
  }
  return {masked.begin(), masked.end()};
}

std::vector<std::vector<int>> sample_distractors(const std::vector<int>& masked,
                                                 int k, Rng& rng) {
  if (k < 0) throw ValueError("sample_distractors: negative count");
  std::vector<std::vector<int>> out(masked.size());
  if (k == 0) return out;
  if (masked.size() < 2) {
    throw ValueError(
        "sample_distractors: need at least two masked frames to draw "
        "negatives; raise mask_prob or mask_span");
  }
  for (std::size_t i = 0; i < masked.size(); ++i) {
    std::vector<int> pool;
    pool.reserve(masked.size() - 1);
    for (std::size_t j = 0; j < masked.size(); ++j) {
      if (j != i) pool.push_back(masked[j]);
    }
    out[i].reserve(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
      out[i].push_back(pool[rng.uniform_below(pool.size())]);
    }
  }
  return out;
}

UttForward forward_utterance(const Params& params,
                             std::span<const double> features, int frames,
                             int channels, const ForwardOptions& opts,
                             const Rng& rng) {
  const ModelConfig& cfg = params.config;
  if (channels != cfg.input_channels) {
    throw ShapeError("forward: expected " + std::to_string(cfg.input_channels) +
                     " channels, got " + std::to_string(channels));
  }
  if (frames < 1 ||
      static_cast<std::size_t>(frames) * channels != features.size()) {
    throw ShapeError("forward: bad feature dimensions");
  }
  auto tensor_at = [&](const std::string& name) -> const ad::Tensor& {
    auto it = params.tensors.find(name);
    if (it == params.tensors.end()) {
      throw CheckpointError("forward: missing parameter '" + name + "'");
    }
    return it->second;
  };

  std::vector<double> feats(features.begin(), features.end());
  if (opts.specaugment) {
    Rng aug_rng = rng.derive("specaug");
    feats = augment::spec_augment(feats, frames, channels, *opts.specaugment,
                                  aug_rng);
  }
  ad::Tensor x = ad::Tensor::leaf({frames, channels}, std::move(feats));

  const int k = cfg.conv_kernel;
  const int pad = k / 2;
  ad::Tensor h = ad::gelu(ad::conv1d(x, tensor_at("conv0.weight"),
                                     tensor_at("conv0.bias"), k,
                                     cfg.downsample_factor, pad,
                                     pad - (k % 2 == 0 ? 1 : 0)));
  h = ad::gelu(ad::conv1d(h, tensor_at("conv1.weight"), tensor_at("conv1.bias"),
                          k, 1, pad, pad - (k % 2 == 0 ? 1 : 0)));
  ad::Tensor latents = ad::layer_norm_rows(h, tensor_at("encoder_ln.gain"),
                                           tensor_at("encoder_ln.bias"),
                                           cfg.layer_norm_eps);
  const int t_out = latents.dim(0);
  if (t_out != cfg.frames_out(frames)) {
    throw ShapeError("forward: encoder produced " + std::to_string(t_out) +
                     " frames, expected " +
                     std::to_string(cfg.frames_out(frames)));
  }

  UttForward out;
  out.frames_out = t_out;

  if (opts.compute_quantized) {
    Rng gumbel_rng = rng.derive("gumbel");
    const int entries = cfg.codebook_entries;
    ad::Tensor qlogits =
        ad::add_rowvec(ad::matmul(latents, tensor_at("quantizer.weight")),
                       tensor_at("quantizer.bias"));
    std::vector<ad::Tensor> q_parts;
    std::vector<ad::Tensor> prob_rows;
    for (int g = 0; g < cfg.codebook_groups; ++g) {
      ad::Tensor group_logits = ad::slice_cols(qlogits, g * entries, entries);
      prob_rows.push_back(
          ad::mean_axis(ad::softmax_rows(group_logits), 0));
      ad::Tensor codes =
          ad::gumbel_softmax_rows(group_logits, opts.gumbel_temperature,
                                  gumbel_rng, cfg.gumbel_hard);
      q_parts.push_back(ad::matmul(
          codes, tensor_at("quantizer.codebook" + std::to_string(g))));
    }
    out.quantized = ad::concat_cols(q_parts);
    out.codebook_probs = ad::vstack(prob_rows);
  }

  ad::Tensor ctx_in = latents;
  if (opts.apply_masking) {
    Rng mask_rng = rng.derive("mask");
    out.masked =
        sample_mask_indices(t_out, cfg.mask_prob, cfg.mask_span, mask_rng);
    if (!out.masked.empty()) {
      ctx_in = ad::replace_rows(latents, out.masked,
                                tensor_at("mask_embedding"));
    }
  }

  if (cfg.position_encoding == "sinusoidal") {
    ctx_in = ad::add(ctx_in,
                     ad::Tensor::leaf({t_out, cfg.encoder_dim},
                                      sinusoidal_encoding(t_out, cfg.encoder_dim)));
  }

  const int d = cfg.encoder_dim;
  const int heads = cfg.attention_heads;
  const int dh = d / heads;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  ad::Tensor stream = ctx_in;
  for (int l = 0; l < cfg.context_layers; ++l) {
    const std::string pre = "layer" + std::to_string(l) + ".";
    ad::Tensor normed =
        ad::layer_norm_rows(stream, tensor_at(pre + "ln1.gain"),
                            tensor_at(pre + "ln1.bias"), cfg.layer_norm_eps);
    ad::Tensor q = ad::add_rowvec(ad::matmul(normed, tensor_at(pre + "attn.wq")),
                                  tensor_at(pre + "attn.bq"));
    ad::Tensor kk = ad::add_rowvec(ad::matmul(normed, tensor_at(pre + "attn.wk")),
                                   tensor_at(pre + "attn.bk"));
    ad::Tensor v = ad::add_rowvec(ad::matmul(normed, tensor_at(pre + "attn.wv")),
                                  tensor_at(pre + "attn.bv"));
    std::vector<ad::Tensor> head_outs;
    head_outs.reserve(static_cast<std::size_t>(heads));
    for (int hd = 0; hd < heads; ++hd) {
      ad::Tensor qh = ad::slice_cols(q, hd * dh, dh);
      ad::Tensor kh = ad::slice_cols(kk, hd * dh, dh);
      ad::Tensor vh = ad::slice_cols(v, hd * dh, dh);
      ad::Tensor scores =
          ad::scale(ad::matmul(qh, ad::transpose(kh)), att_scale);
      head_outs.push_back(ad::matmul(ad::softmax_rows(scores), vh));
    }
    ad::Tensor attn_out =
        ad::add_rowvec(ad::matmul(ad::concat_cols(head_outs),
                                  tensor_at(pre + "attn.wo")),
                       tensor_at(pre + "attn.bo"));
    stream = ad::add(stream, attn_out);

    ad::Tensor normed2 =
        ad::layer_norm_rows(stream, tensor_at(pre + "ln2.gain"),
                            tensor_at(pre + "ln2.bias"), cfg.layer_norm_eps);
    ad::Tensor f =
        ad::gelu(ad::add_rowvec(ad::matmul(normed2, tensor_at(pre + "ffn.w1")),
                                tensor_at(pre + "ffn.b1")));
    ad::Tensor f2 = ad::add_rowvec(ad::matmul(f, tensor_at(pre + "ffn.w2")),
                                   tensor_at(pre + "ffn.b2"));
    stream = ad::add(stream, f2);
  }
  ad::Tensor context =
      ad::layer_norm_rows(stream, tensor_at("final_ln.gain"),
                          tensor_at("final_ln.bias"), cfg.layer_norm_eps);

  out.ctc_log_probs = ad::log_softmax_rows(
      ad::add_rowvec(ad::matmul(context, tensor_at("head.weight")),
                     tensor_at("head.bias")));
  if (opts.compute_quantized) {
    out.context_proj =
        ad::add_rowvec(ad::matmul(context, tensor_at("proj.weight")),
                       tensor_at("proj.bias"));
  }
  return out;
}

}  // namespace msda::model
