// pipeline/trainer.cpp

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

#include "msda/pipeline/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>

#include "msda/autodiff/ops.hpp"
#include "msda/error.hpp"
#include "msda/eval/decode.hpp"
#include "msda/eval/wer.hpp"
#include "msda/losses/ctc.hpp"
#include "msda/model/checkpoint.hpp"
#include "msda/rng.hpp"

namespace msda::pipeline {

namespace ad = autodiff;

const char* stage1_mode_name(Stage1Mode mode) {
  switch (mode) {
    case Stage1Mode::mixed: return "mixed";
    case Stage1Mode::supervised_only: return "supervised_only";
    case Stage1Mode::ssl_target_only: return "ssl_target_only";
  }
  return "?";
}

namespace {

using Batch = std::vector<const data::Utterance*>;

std::vector<const data::Utterance*> shuffled_split(
    const data::Corpus& corpus, data::Split split, const Rng& run_rng,
    const char* tag, int epoch) {
  auto utts = corpus.split_view(split);
  Rng rng = run_rng.derive("order").derive(tag).derive(static_cast<std::uint64_t>(epoch));
  rng.shuffle(utts);
  return utts;
}

Batch slice_batch(const std::vector<const data::Utterance*>& order,
                  std::size_t begin, std::size_t count) {
  Batch b;
  b.reserve(count);
  for (std::size_t j = 0; j < count; ++j) b.push_back(order[(begin + j) % order.size()]);
  return b;
}

struct BatchForward {
  std::vector<model::UttForward> fwd;
  long augmented = 0;  // 1 if this batch went through feature masking noise
};

// Runs the model over a batch. Every random decision inside draws from a
// stream derived from (step stream, domain tag, slot index), so adding or
// removing other consumers cannot shift the draws seen here.
BatchForward forward_batch(const model::Params& params, const Batch& batch,
                           const Rng& step_rng, const char* tag,
                           const model::ForwardOptions& opts) {
  BatchForward out;
  out.fwd.reserve(batch.size());
  Rng domain_rng = step_rng.derive(tag);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto* u = batch[i];
    out.fwd.push_back(model::forward_utterance(
        params, u->features, u->frames, u->channels, opts,
        domain_rng.derive(static_cast<std::uint64_t>(i))));
  }
  if (opts.specaugment != nullptr && !batch.empty()) out.augmented = 1;
  return out;
}

struct CtcTerm {
  ad::Tensor loss;   // mean length-normalized CTC loss over usable utterances
  int used = 0;
  int skipped = 0;
};

CtcTerm ctc_batch_term(const std::vector<model::UttForward>& fwd,
                       const std::vector<std::vector<int>>& targets,
                       int vocab_size) {
  CtcTerm term;
  std::vector<ad::Tensor> parts;
  for (std::size_t i = 0; i < fwd.size(); ++i) {
    // Empty targets (all-blank pseudo-labels) carry no transcription signal
    // and would push the model further toward silence, so they are skipped.
    if (targets[i].empty()) {
      ++term.skipped;
      continue;
    }
    try {
      ad::Tensor l = losses::ctc_loss(fwd[i].ctc_log_probs, targets[i]);
      double norm = 1.0 / static_cast<double>(std::max<std::size_t>(1, targets[i].size()));
      parts.push_back(ad::scale(l, norm));
      ++term.used;
    } catch (const AlignmentError&) {
      ++term.skipped;
    }
  }
  (void)vocab_size;
  if (parts.empty()) {
    term.loss = ad::scalar(0.0);
  } else {
    term.loss = ad::scale(ad::add_n(parts), 1.0 / static_cast<double>(parts.size()));
  }
  return term;
}

std::vector<std::vector<int>> batch_labels(const Batch& batch) {
  std::vector<std::vector<int>> out;
  out.reserve(batch.size());
  for (const auto* u : batch) out.push_back(u->labels);
  return out;
}

struct SslTerm {
  ad::Tensor contrastive;
  ad::Tensor diversity;
};

// Contrastive + codebook-entropy terms over a batch that was run with
// masking and quantization enabled.
SslTerm ssl_batch_term(const std::vector<model::UttForward>& fwd,
                       const model::ModelConfig& cfg, const Rng& step_rng,
                       const char* tag) {
  SslTerm out;
  std::vector<ad::Tensor> contrast;
  std::vector<ad::Tensor> probs;
  Rng domain_rng = step_rng.derive(tag);
  for (std::size_t i = 0; i < fwd.size(); ++i) {
    Rng d = domain_rng.derive(static_cast<std::uint64_t>(i)).derive("distractors");
    auto distractors = model::sample_distractors(fwd[i].masked, cfg.num_distractors, d);
    contrast.push_back(losses::contrastive_loss(fwd[i].context_proj, fwd[i].quantized,
                                                fwd[i].masked, distractors,
                                                cfg.contrastive_temp));
    probs.push_back(fwd[i].codebook_probs);
  }
  double inv = 1.0 / static_cast<double>(fwd.size());
  out.contrastive = contrast.size() == 1 ? contrast[0] : ad::scale(ad::add_n(contrast), inv);
  ad::Tensor mean_probs = probs.size() == 1 ? probs[0] : ad::scale(ad::add_n(probs), inv);
  out.diversity = losses::diversity_loss(mean_probs);
  return out;
}

double split_wer(const model::Params& params,
                 const std::vector<const data::Utterance*>& utts) {
  ad::NoGradGuard ng;
  long edits = 0;
  long ref_tokens = 0;
  model::ForwardOptions opts;  // clean forward: no masking, no augmentation
  for (const auto* u : utts) {
    auto fwd = model::forward_utterance(params, u->features, u->frames, u->channels,
                                        opts, Rng(0));
    auto hyp = eval::greedy_decode(fwd.ctc_log_probs.value(), fwd.frames_out,
                                   params.config.vocab_size);
    auto counts = eval::wer_align(u->labels, hyp);
    edits += counts.total();
    ref_tokens += static_cast<long>(u->labels.size());
  }
  if (ref_tokens == 0) return 0.0;
  return static_cast<double>(edits) / static_cast<double>(ref_tokens);
}

nlohmann::json terms_json(const losses::LossBundle& bundle) {
  nlohmann::json terms = nlohmann::json::object();
  for (const auto& [name, t] : bundle.terms) terms[name] = t.item();
  return terms;
}

// Reraises compute failures with the training position attached, keeping the
// error type so callers can still map it to an exit code.
template <typename Fn>
void with_step_context(const char* stage, long step, Fn&& fn) {
  auto ctx = [&](const char* what) {
    return std::string(stage) + " step " + std::to_string(step) + ": " + what;
  };
  try {
    fn();
  } catch (const ShapeError& e) {
    throw ShapeError(ctx(e.what()));
  } catch (const ValueError& e) {
    throw ValueError(ctx(e.what()));
  } catch (const DataError& e) {
    throw DataError(ctx(e.what()));
  }
}

void save_stage1_state(const std::filesystem::path& path, const model::Params& params,
                       const model::Params& best, const AdamW& opt,
                       const TrainStats& stats, long step, int divergence_streak) {
  model::BlobFile blob;
  for (const auto& [name, t] : params.tensors)
    blob.tensors["params." + name] = {
        t.shape(), std::vector<double>(t.value().begin(), t.value().end())};
  for (const auto& [name, t] : best.tensors)
    blob.tensors["best." + name] = {
        t.shape(), std::vector<double>(t.value().begin(), t.value().end())};
  opt.serialize(&blob, "opt");
  blob.extras["model_config"] = model::config_to_json(params.config);
  blob.extras["epochs_done"] = stats.epochs_done;
  blob.extras["step"] = step;
  blob.extras["best_dev_wer"] = stats.best_dev_wer;
  blob.extras["best_epoch"] = stats.best_epoch;
  blob.extras["ctc_skipped"] = stats.ctc_skipped_utterances;
  blob.extras["divergence_streak"] = divergence_streak;
  model::save_blob_file(path, blob);
}

void load_into_params(const model::BlobFile& blob, const std::string& prefix,
                      model::Params* params) {
  for (auto& [name, t] : params->tensors) {
    auto it = blob.tensors.find(prefix + name);
    if (it == blob.tensors.end())
      throw CheckpointError("state missing tensor " + prefix + name);
    if (it->second.second.size() != t.value().size())
      throw CheckpointError("state tensor size mismatch for " + prefix + name);
    t.node()->value = it->second.second;
  }
}

}  // namespace

std::vector<std::vector<int>> pseudo_label(
    const model::Params& params, const std::vector<const data::Utterance*>& batch) {
  ad::NoGradGuard ng;
  model::ForwardOptions opts;
  std::vector<std::vector<int>> out;
  out.reserve(batch.size());
  for (const auto* u : batch) {
    auto fwd = model::forward_utterance(params, u->features, u->frames, u->channels,
                                        opts, Rng(0));
    out.push_back(eval::greedy_decode(fwd.ctc_log_probs.value(), fwd.frames_out,
                                      params.config.vocab_size));
  }
  return out;
}

double mean_ctc_loss(const model::Params& params,
                     const std::vector<const data::Utterance*>& utts) {
  ad::NoGradGuard ng;
  model::ForwardOptions opts;
  double total = 0.0;
  int used = 0;
  for (const auto* u : utts) {
    auto fwd = model::forward_utterance(params, u->features, u->frames, u->channels,
                                        opts, Rng(0));
    try {
      double l = losses::ctc_loss_value(fwd.ctc_log_probs.value(), fwd.frames_out,
                                        params.config.vocab_size, u->labels);
      total += l / static_cast<double>(std::max<std::size_t>(1, u->labels.size()));
      ++used;
    } catch (const AlignmentError&) {
    }
  }
  return used == 0 ? 0.0 : total / used;
}

Stage1Result train_stage1(const data::Corpus& source, const data::Corpus& target,
                          model::Params init, const Stage1Config& cfg,
                          std::uint64_t seed, MetricsWriter* metrics,
                          const StepHook* hook,
                          const std::filesystem::path* state_path, bool resume) {
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
  const bool use_source_ctc = cfg.mode != Stage1Mode::ssl_target_only;

  Stage1Result res;
  res.params = std::move(init);
  res.best_params = res.params.clone();
  AdamW opt(cfg.optim);
  long step = 0;
  int start_epoch = 0;
  int divergence_streak = 0;

  if (resume) {
    if (state_path == nullptr) throw ConfigError("resume requested without a state path");
    model::BlobFile blob = model::load_blob_file(*state_path);
    load_into_params(blob, "params.", &res.params);
    load_into_params(blob, "best.", &res.best_params);
    opt.deserialize(blob, "opt", res.params);
    res.stats.epochs_done = blob.extras.at("epochs_done").get<int>();
    res.stats.best_dev_wer = blob.extras.at("best_dev_wer").get<double>();
    res.stats.best_epoch = blob.extras.at("best_epoch").get<int>();
    res.stats.ctc_skipped_utterances = blob.extras.at("ctc_skipped").get<long>();
    divergence_streak = blob.extras.at("divergence_streak").get<int>();
    step = blob.extras.at("step").get<long>();
    start_epoch = res.stats.epochs_done;
  }

  Rng run_rng(seed);
  const auto& mcfg = res.params.config;
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = start_epoch; epoch < cfg.epochs && !res.stats.diverged; ++epoch) {
    auto src_order = shuffled_split(source, data::Split::train, run_rng, "source", epoch);
    auto tgt_order = shuffled_split(target, data::Split::train, run_rng, "target", epoch);
    const auto& primary = cfg.mode == Stage1Mode::ssl_target_only ? tgt_order : src_order;
    if (primary.empty()) throw DataError("empty training split");
    const std::size_t batches = (primary.size() + bs - 1) / bs;

    for (std::size_t b = 0; b < batches; ++b) {
      Rng step_rng = run_rng.derive("step").derive(static_cast<std::uint64_t>(step));
      const std::size_t lo = b * bs;
      const std::size_t n = std::min(bs, primary.size() - lo);

      losses::LossBundle bundle;
      CtcTerm ctc;
      model::ForwardOptions train_opts;
      train_opts.apply_masking = true;
      train_opts.gumbel_temperature = model::gumbel_temperature(mcfg, step);
      train_opts.specaugment = cfg.specaugment.enabled ? &cfg.specaugment : nullptr;

      with_step_context("stage1", step, [&] {
        if (cfg.mode == Stage1Mode::supervised_only) {
          Batch sb = slice_batch(src_order, lo, n);
          model::ForwardOptions opts = train_opts;
          auto sf = forward_batch(res.params, sb, step_rng, "source", opts);
          ctc = ctc_batch_term(sf.fwd, batch_labels(sb), mcfg.vocab_size);
          bundle = losses::ctc_objective(ctc.loss);
        } else if (cfg.mode == Stage1Mode::ssl_target_only) {
          Batch tb = slice_batch(tgt_order, lo, n);
          model::ForwardOptions opts = train_opts;
          opts.compute_quantized = true;
          auto tf = forward_batch(res.params, tb, step_rng, "target", opts);
          auto ssl = ssl_batch_term(tf.fwd, mcfg, step_rng, "target");
          bundle = losses::ssl_objective(
              losses::ssl_term(ssl.contrastive, ssl.diversity, mcfg.diversity_weight,
                               mcfg.ssl_include_diversity));
        } else {
          Batch sb = slice_batch(src_order, lo, n);
          Batch tb = slice_batch(tgt_order, lo, bs);
          model::ForwardOptions sopts = train_opts;
          sopts.compute_quantized = true;
          auto sf = forward_batch(res.params, sb, step_rng, "source", sopts);
          auto tf = forward_batch(res.params, tb, step_rng, "target", sopts);
          ctc = ctc_batch_term(sf.fwd, batch_labels(sb), mcfg.vocab_size);
          auto ssl_s = ssl_batch_term(sf.fwd, mcfg, step_rng, "source");
          auto ssl_t = ssl_batch_term(tf.fwd, mcfg, step_rng, "target");
          bundle = losses::mixed_ssl_objective(
              ctc.loss,
              losses::ssl_term(ssl_s.contrastive, ssl_s.diversity,
                               mcfg.diversity_weight, mcfg.ssl_include_diversity),
              losses::ssl_term(ssl_t.contrastive, ssl_t.diversity,
                               mcfg.diversity_weight, mcfg.ssl_include_diversity),
              cfg.alpha, cfg.beta);
        }
      });
      res.stats.ctc_skipped_utterances += ctc.skipped;

      const double total = bundle.total.item();
      if (!std::isfinite(total)) {
        ++divergence_streak;
        std::cerr << "warning: non-finite loss at step " << step << "\n";
        if (divergence_streak > cfg.divergence_patience) {
          res.stats.diverged = true;
          res.stats.divergence_message =
              "loss non-finite for " + std::to_string(divergence_streak) + " steps";
          break;
        }
      } else {
        divergence_streak = 0;
        res.params.zero_grads();
        bundle.total.backward();
        opt.step(res.params);
      }

      if (metrics != nullptr) {
        nlohmann::json rec;
        rec["type"] = "step";
        rec["step"] = step;
        rec["epoch"] = epoch;
        rec["total"] = total;
        rec["terms"] = terms_json(bundle);
        metrics->write(rec);
      }
      if (hook != nullptr) {
        StepInfo info;
        info.step = step;
        info.epoch = epoch;
        info.bundle = &bundle;
        (*hook)(info);
      }
      ++step;
      ++res.stats.steps;
    }
    if (res.stats.diverged) break;

    res.stats.epochs_done = epoch + 1;
    bool is_best = false;
    double wer = std::numeric_limits<double>::quiet_NaN();
    if (use_source_ctc) {
      wer = split_wer(res.params, source.split_view(data::Split::dev));
      if (wer < res.stats.best_dev_wer) {
        res.stats.best_dev_wer = wer;
        res.stats.best_epoch = epoch;
        res.best_params = res.params.clone();
        is_best = true;
      }
    } else {
      // No transcription objective yet; the stage output is the final model.
      res.best_params = res.params.clone();
    }
    if (metrics != nullptr) {
      nlohmann::json rec;
      rec["type"] = "epoch";
      rec["epoch"] = epoch;
      if (use_source_ctc) {
        rec["dev_wer"] = wer;
        rec["best"] = is_best;
      }
      metrics->write(rec);
    }
    if (state_path != nullptr) {
      save_stage1_state(*state_path, res.params, res.best_params, opt, res.stats,
                        step, divergence_streak);
    }
  }

  if (!std::isfinite(res.stats.best_dev_wer) && !use_source_ctc) {
    res.stats.best_dev_wer = std::numeric_limits<double>::quiet_NaN();
  }
  if (metrics != nullptr) {
    nlohmann::json rec;
    rec["type"] = "train_end";
    rec["steps"] = res.stats.steps;
    rec["epochs"] = res.stats.epochs_done;
    rec["diverged"] = res.stats.diverged;
    rec["skipped_utterances"] = res.stats.ctc_skipped_utterances;
    metrics->write(rec);
  }
  return res;
}

Stage2Result train_stage2(const data::Corpus& source, const data::Corpus& target,
                          model::Params teacher_init, const Stage2Config& cfg,
                          std::uint64_t seed, MetricsWriter* metrics,
                          const StepHook* hook) {
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  Stage2Result res;
  res.teacher = std::move(teacher_init);
  res.student = res.teacher.clone();
  res.best_student = res.student.clone();
  AdamW teacher_opt(cfg.teacher_optim);
  AdamW student_opt(cfg.student_optim);

  Rng run_rng(seed);
  const auto& mcfg = res.teacher.config;
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  long step = 0;
  int divergence_streak = 0;
  double initial_source_loss = std::numeric_limits<double>::quiet_NaN();

  for (int epoch = 0; epoch < cfg.epochs && !res.stats.diverged; ++epoch) {
    auto tgt_order = shuffled_split(target, data::Split::train, run_rng, "target", epoch);
    auto src_order = shuffled_split(source, data::Split::train, run_rng, "source", epoch);
    if (tgt_order.empty() || src_order.empty()) throw DataError("empty training split");
    const std::size_t batches = (tgt_order.size() + bs - 1) / bs;

    for (std::size_t b = 0; b < batches; ++b) {
      Rng step_rng = run_rng.derive("step").derive(static_cast<std::uint64_t>(step));
      const std::size_t lo = b * bs;
      const std::size_t n = std::min(bs, tgt_order.size() - lo);
      Batch tb = slice_batch(tgt_order, lo, n);
      Batch sb = slice_batch(src_order, lo, bs);
      const double gtemp = model::gumbel_temperature(mcfg, cfg.step_offset + step);

      // Teacher reads the clean target batch and emits pseudo-labels.
      BatchForward teacher_tgt;
      std::vector<std::vector<int>> pseudo;
      with_step_context("stage2", step, [&] {
        model::ForwardOptions t_opts;
        t_opts.compute_quantized = cfg.teacher == TeacherObjective::anchored;
        t_opts.gumbel_temperature = gtemp;
        teacher_tgt = forward_batch(res.teacher, tb, step_rng, "teacher_target", t_opts);
        pseudo.reserve(teacher_tgt.fwd.size());
        for (const auto& f : teacher_tgt.fwd) {
          pseudo.push_back(eval::greedy_decode(f.ctc_log_probs.value(), f.frames_out,
                                               mcfg.vocab_size));
        }
      });

      // Student improvement on labeled source data before its update.
      const double before = mean_ctc_loss(res.student, sb);
      if (step == 0) initial_source_loss = before;

      // Student trains on the augmented target batch against pseudo-labels.
      // Feature masking is contrastive-loss machinery, so it only applies when
      // the student optimizes an ssl term on top of the pseudo-label CTC.
      losses::LossBundle student_bundle;
      with_step_context("stage2", step, [&] {
        model::ForwardOptions s_opts;
        s_opts.apply_masking = cfg.student == StudentObjective::ctc_ssl;
        s_opts.compute_quantized = cfg.student == StudentObjective::ctc_ssl;
        s_opts.gumbel_temperature = gtemp;
        s_opts.specaugment = cfg.specaugment.enabled ? &cfg.specaugment : nullptr;
        auto student_tgt =
            forward_batch(res.student, tb, step_rng, "student_target", s_opts);
        res.stats.augmented_student_batches += student_tgt.augmented;
        res.stats.augmented_teacher_batches += teacher_tgt.augmented;

        CtcTerm student_ctc = ctc_batch_term(student_tgt.fwd, pseudo, mcfg.vocab_size);
        res.stats.ctc_skipped_utterances += student_ctc.skipped;
        if (cfg.student == StudentObjective::ctc_ssl) {
          auto ssl_t = ssl_batch_term(student_tgt.fwd, mcfg, step_rng, "student_target");
          student_bundle = losses::student_ssl_objective(
              student_ctc.loss,
              losses::ssl_term(ssl_t.contrastive, ssl_t.diversity,
                               mcfg.diversity_weight, mcfg.ssl_include_diversity));
        } else {
          student_bundle = losses::ctc_objective(student_ctc.loss);
        }
      });

      const double student_total = student_bundle.total.item();
      bool bad = !std::isfinite(student_total);
      if (!bad) {
        res.student.zero_grads();
        student_bundle.total.backward();
        student_opt.step(res.student);
      }

      const double after = mean_ctc_loss(res.student, sb);
      const double h = before - after;

      // Runaway students poison the feedback signal, so the run stops as soon
      // as their source loss blows up past its starting point.
      if (std::isfinite(after) && std::isfinite(initial_source_loss) &&
          after > 10.0 * std::max(initial_source_loss, 1e-6)) {
        res.stats.diverged = true;
        char msg[160];
        std::snprintf(msg, sizeof(msg),
                      "student source loss %.6g exceeds 10x its initial value "
                      "%.6g at step %ld",
                      after, initial_source_loss, step);
        res.stats.divergence_message = msg;
        break;
      }

      // A non-finite improvement score carries no usable signal; the step
      // keeps its supervised and regularization terms and drops the feedback.
      double h_used = h;
      if (!std::isfinite(h_used)) {
        std::cerr << "warning: non-finite h at step " << step
                  << ", feedback term zeroed\n";
        h_used = 0.0;
      }

      // Teacher feedback: reward pseudo-labels in proportion to how much the
      // student improved on held labeled data after learning from them.
      losses::LossBundle teacher_bundle;
      with_step_context("stage2", step, [&] {
        CtcTerm feedback = ctc_batch_term(teacher_tgt.fwd, pseudo, mcfg.vocab_size);
        if (cfg.teacher == TeacherObjective::anchored) {
          model::ForwardOptions a_opts;
          a_opts.gumbel_temperature = gtemp;
          auto teacher_src =
              forward_batch(res.teacher, sb, step_rng, "teacher_source", a_opts);
          res.stats.augmented_teacher_batches += teacher_src.augmented;
          CtcTerm anchor = ctc_batch_term(teacher_src.fwd, batch_labels(sb), mcfg.vocab_size);
          res.stats.ctc_skipped_utterances += anchor.skipped;
          std::vector<ad::Tensor> probs;
          for (const auto& f : teacher_tgt.fwd) probs.push_back(f.codebook_probs);
          ad::Tensor mean_probs = probs.size() == 1
                                      ? probs[0]
                                      : ad::scale(ad::add_n(probs),
                                                  1.0 / static_cast<double>(probs.size()));
          teacher_bundle = losses::teacher_objective(feedback.loss, h_used, anchor.loss,
                                                     cfg.gamma,
                                                     losses::diversity_loss(mean_probs),
                                                     cfg.delta);
        } else {
          model::ForwardOptions m_opts;
          m_opts.apply_masking = true;
          m_opts.compute_quantized = true;
          m_opts.gumbel_temperature = gtemp;
          auto teacher_src =
              forward_batch(res.teacher, sb, step_rng, "teacher_source", m_opts);
          auto teacher_tgt_masked =
              forward_batch(res.teacher, tb, step_rng, "teacher_target_ssl", m_opts);
          res.stats.augmented_teacher_batches +=
              teacher_src.augmented + teacher_tgt_masked.augmented;
          auto ssl_s = ssl_batch_term(teacher_src.fwd, mcfg, step_rng, "teacher_source");
          auto ssl_t =
              ssl_batch_term(teacher_tgt_masked.fwd, mcfg, step_rng, "teacher_target_ssl");
          teacher_bundle = losses::teacher_ssl_objective(
              feedback.loss, h_used,
              losses::ssl_term(ssl_s.contrastive, ssl_s.diversity, mcfg.diversity_weight,
                               mcfg.ssl_include_diversity),
              losses::ssl_term(ssl_t.contrastive, ssl_t.diversity, mcfg.diversity_weight,
                               mcfg.ssl_include_diversity));
        }
      });

      const double teacher_total = teacher_bundle.total.item();
      bad = bad || !std::isfinite(teacher_total);
      if (!std::isfinite(teacher_total)) {
        std::cerr << "warning: non-finite teacher loss at step " << step << "\n";
      } else {
        res.teacher.zero_grads();
        teacher_bundle.total.backward();
        teacher_opt.step(res.teacher);
      }

      if (bad) {
        ++divergence_streak;
        if (divergence_streak > cfg.divergence_patience) {
          res.stats.diverged = true;
          res.stats.divergence_message =
              "loss non-finite for " + std::to_string(divergence_streak) + " steps";
        }
      } else {
        divergence_streak = 0;
      }

      if (metrics != nullptr) {
        nlohmann::json rec;
        rec["type"] = "step";
        rec["step"] = step;
        rec["epoch"] = epoch;
        rec["h"] = h_used;
        rec["teacher_total"] = teacher_total;
        rec["teacher_terms"] = terms_json(teacher_bundle);
        rec["student_total"] = student_total;
        rec["student_terms"] = terms_json(student_bundle);
        metrics->write(rec);
      }
      if (hook != nullptr) {
        StepInfo info;
        info.step = step;
        info.epoch = epoch;
        info.bundle = &teacher_bundle;
        info.student_bundle = &student_bundle;
        info.h = h_used;
        (*hook)(info);
      }
      ++step;
      ++res.stats.steps;
      if (res.stats.diverged) break;
    }
    if (res.stats.diverged) break;

    res.stats.epochs_done = epoch + 1;
    const double student_wer = split_wer(res.student, target.split_view(data::Split::dev));
    const double teacher_wer = split_wer(res.teacher, target.split_view(data::Split::dev));
    bool is_best = false;
    if (student_wer < res.stats.best_dev_wer) {
      res.stats.best_dev_wer = student_wer;
      res.stats.best_epoch = epoch;
      res.best_student = res.student.clone();
      is_best = true;
    }
    if (metrics != nullptr) {
      nlohmann::json rec;
      rec["type"] = "epoch";
      rec["epoch"] = epoch;
      rec["dev_wer"] = student_wer;
      rec["teacher_dev_wer"] = teacher_wer;
      rec["best"] = is_best;
      metrics->write(rec);
    }
  }

  if (metrics != nullptr) {
    nlohmann::json rec;
    rec["type"] = "train_end";
    rec["steps"] = res.stats.steps;
    rec["epochs"] = res.stats.epochs_done;
    rec["diverged"] = res.stats.diverged;
    rec["skipped_utterances"] = res.stats.ctc_skipped_utterances;
    rec["augmented_teacher_batches"] = res.stats.augmented_teacher_batches;
    rec["augmented_student_batches"] = res.stats.augmented_student_batches;
    metrics->write(rec);
  }
  return res;
}

}  // namespace msda::pipeline
