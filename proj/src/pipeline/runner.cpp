// pipeline/runner.cpp

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

#include "msda/pipeline/runner.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "msda/error.hpp"
#include "msda/eval/evaluate.hpp"
#include "msda/model/checkpoint.hpp"
#include "msda/version.hpp"

namespace msda::pipeline {

Method method_from_name(const std::string& name) {
  for (Method m : all_methods())
    if (name == method_name(m)) return m;
  throw ConfigError("unknown method: " + name);
}

const char* method_name(Method m) {
  switch (m) {
    case Method::ft: return "ft";
    case Method::cpt: return "cpt";
    case Method::m2ds2: return "m2ds2";
    case Method::ft_mp: return "ft_mp";
    case Method::m2ds2_mp: return "m2ds2_mp";
    case Method::msda: return "msda";
    case Method::msda_ssl_teacher: return "msda_ssl_teacher";
    case Method::msda_ssl_student: return "msda_ssl_student";
  }
  return "?";
}

bool method_uses_stage2(Method m) {
  switch (m) {
    case Method::ft:
    case Method::cpt:
    case Method::m2ds2:
      return false;
    default:
      return true;
  }
}

std::vector<Method> all_methods() {
  return {Method::ft,       Method::cpt,      Method::m2ds2,
          Method::ft_mp,    Method::m2ds2_mp, Method::msda,
          Method::msda_ssl_teacher, Method::msda_ssl_student};
}

namespace {

bool mixed_first_stage(Method m) {
  switch (m) {
    case Method::m2ds2:
    case Method::m2ds2_mp:
    case Method::msda:
    case Method::msda_ssl_teacher:
    case Method::msda_ssl_student:
      return true;
    default:
      return false;
  }
}

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.rfind(prefix, 0) == 0;
}

}  // namespace

void reject_unused_overrides(Method m, const std::vector<std::string>& keys) {
  for (const auto& k : keys) {
    const bool ssl_coefs = k == "stage1.alpha" || k == "stage1.beta";
    const bool anchor_coefs = k == "stage2.gamma" || k == "stage2.delta";
    const bool any_stage2 = starts_with(k, "stage2.");
    std::string why;
    if (!mixed_first_stage(m) && ssl_coefs)
      why = "the first stage has no self-supervised terms";
    else if (!method_uses_stage2(m) && any_stage2)
      why = "there is no teacher/student stage";
    else if ((m == Method::ft_mp || m == Method::m2ds2_mp) && anchor_coefs)
      why = "the teacher anchors are fixed at gamma=1, delta=0";
    else if (m == Method::msda_ssl_teacher && anchor_coefs)
      why = "the teacher is anchored by SSL terms, not gamma/delta";
    if (!why.empty())
      throw ConfigError("override " + k + " has no effect for method " +
                        method_name(m) + ": " + why);
  }
}

Runner::Runner(const data::Corpus* source, const data::Corpus* target,
               ExperimentConfig cfg)
    : source_(source), target_(target), cfg_(std::move(cfg)) {
  if (source_ == nullptr || target_ == nullptr)
    throw ValueError("runner needs both corpora");
}

namespace {

std::string fraction_tag(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", fraction);
  return buf;
}

// Training split reduced to `fraction`; dev and test untouched.
std::shared_ptr<data::Corpus> reduce_target(const data::Corpus& full,
                                            double fraction,
                                            std::uint64_t data_seed) {
  auto out = std::make_shared<data::Corpus>();
  out->domain = full.domain;
  out->vocab = full.vocab;
  out->frame_seconds = full.frame_seconds;
  auto train = full.split_view(data::Split::train);
  auto kept = data::subsample(train, fraction, data_seed);
  for (const auto* u : kept) out->utterances.push_back(*u);
  for (const auto& u : full.utterances)
    if (u.split != data::Split::train) out->utterances.push_back(u);
  return out;
}

}  // namespace

RunOutput Runner::run(Method method, std::uint64_t seed) {
  return run(method, seed, cfg_, "full");
}

RunOutput Runner::run(Method method, std::uint64_t seed,
                      const ExperimentConfig& cfg, const std::string& setting) {
  const data::Corpus* target = target_;
  if (cfg.target_fraction < 1.0) {
    const std::string key = fraction_tag(cfg.target_fraction);
    auto it = fraction_cache_.find(key);
    if (it == fraction_cache_.end()) {
      it = fraction_cache_
               .emplace(key, reduce_target(*target_, cfg.target_fraction,
                                           cfg.data.seed))
               .first;
    }
    target = it->second.get();
  }

  std::filesystem::path run_dir;
  const bool artifacts = !out_dir_.empty();
  if (artifacts) {
    std::string leaf = std::string(method_name(method)) + "_" + setting + "_seed" +
                       std::to_string(seed);
    for (auto& c : leaf)
      if (c == '=' || c == '/' || c == ' ') c = '-';
    run_dir = out_dir_ / leaf;
    std::filesystem::create_directories(run_dir);
    nlohmann::json resolved = config_to_json(cfg);
    resolved["method"] = method_name(method);
    resolved["setting"] = setting;
    resolved["run_seed"] = seed;
    resolved["version"] = kVersion;
    std::ofstream os(run_dir / "resolved_config.json", std::ios::binary);
    os << resolved.dump(2) << '\n';
  }

  nlohmann::json header;
  header["version"] = kVersion;
  header["method"] = method_name(method);
  header["setting"] = setting;
  header["seed"] = seed;
  header["config"] = config_to_json(cfg);

  // First stage (possibly two phases for cpt), cached across methods.
  Stage1Config s1 = cfg.stage1;
  s1.mode = mixed_first_stage(method) ? Stage1Mode::mixed : Stage1Mode::supervised_only;
  if (s1.mode == Stage1Mode::mixed) {
    s1.alpha = cfg.stage1.alpha;
    s1.beta = cfg.stage1.beta;
  }

  std::ostringstream ck;
  ck << stage1_mode_name(s1.mode) << '|' << (method == Method::cpt ? "cpt|" : "")
     << s1.alpha << '|' << s1.beta << '|' << s1.epochs << '|' << s1.batch_size
     << '|' << seed << '|' << fraction_tag(cfg.target_fraction);
  const std::string cache_key = ck.str();

  std::shared_ptr<Stage1Result> stage1;
  auto cached = stage1_cache_.find(cache_key);
  if (cached != stage1_cache_.end()) {
    stage1 = cached->second;
  } else {
    model::Params init = model::init_params(cfg.model, Rng(seed));
    std::optional<MetricsWriter> metrics;
    std::filesystem::path state_path;
    const std::filesystem::path* state = nullptr;

    if (method == Method::cpt) {
      // Phase A: self-supervised continued pretraining on target.
      Stage1Config pre = s1;
      pre.mode = Stage1Mode::ssl_target_only;
      std::optional<MetricsWriter> pre_metrics;
      if (artifacts) {
        nlohmann::json h = header;
        h["stage"] = "pretrain";
        pre_metrics.emplace(run_dir / "metrics_pretrain.jsonl", h);
      }
      auto pre_res = train_stage1(*source_, *target, std::move(init), pre,
                                  Rng(seed).derive("pretrain").stream_id(),
                                  pre_metrics ? &*pre_metrics : nullptr);
      init = std::move(pre_res.params);
    }

    if (artifacts) {
      nlohmann::json h = header;
      h["stage"] = "stage1";
      metrics.emplace(run_dir / "metrics_stage1.jsonl", h);
      state_path = run_dir / "stage1_state.ckpt";
      state = &state_path;
    }
    const bool resume = resume_ && state != nullptr &&
                        std::filesystem::exists(state_path);
    auto res = train_stage1(*source_, *target, std::move(init), s1,
                            Rng(seed).derive("stage1").stream_id(),
                            metrics ? &*metrics : nullptr, nullptr, state, resume);
    stage1 = std::make_shared<Stage1Result>(std::move(res));
    stage1_cache_.emplace(cache_key, stage1);
  }

  RunOutput out;
  out.record.method = method_name(method);
  out.record.setting = setting;
  out.record.seed = seed;
  out.record.steps = stage1->stats.steps;
  out.record.diverged = stage1->stats.diverged;
  out.record.best_dev_wer = stage1->stats.best_dev_wer;
  out.params = stage1->best_params.clone();

  if (method_uses_stage2(method) && !stage1->stats.diverged) {
    Stage2Config s2 = cfg.stage2;
    s2.step_offset = stage1->stats.steps;
    if (method == Method::ft_mp || method == Method::m2ds2_mp) {
      s2.gamma = 1.0;
      s2.delta = 0.0;
    }
    if (method == Method::msda_ssl_teacher) s2.teacher = TeacherObjective::ssl;
    if (method == Method::msda_ssl_student) s2.student = StudentObjective::ctc_ssl;

    std::optional<MetricsWriter> metrics2;
    if (artifacts) {
      nlohmann::json h = header;
      h["stage"] = "stage2";
      metrics2.emplace(run_dir / "metrics_stage2.jsonl", h);
    }
    auto res2 = train_stage2(*source_, *target, stage1->best_params.clone(), s2,
                             Rng(seed).derive("stage2").stream_id(),
                             metrics2 ? &*metrics2 : nullptr);
    out.record.steps += res2.stats.steps;
    out.record.diverged = res2.stats.diverged;
    out.record.best_dev_wer = res2.stats.best_dev_wer;
    out.params = std::move(res2.best_student);
  }

  out.record.wer_target_test =
      100.0 * eval::evaluate_corpus(out.params,
                                    target_->split_view(data::Split::test),
                                    target_->vocab)
                  .wer_fraction;
  out.record.wer_source_test =
      100.0 * eval::evaluate_corpus(out.params,
                                    source_->split_view(data::Split::test),
                                    source_->vocab)
                  .wer_fraction;

  if (artifacts) {
    nlohmann::json extras;
    extras["method"] = method_name(method);
    extras["setting"] = setting;
    extras["seed"] = seed;
    extras["version"] = kVersion;
    extras["config"] = config_to_json(cfg);
    model::save_model(run_dir / "model.ckpt", out.params, extras);
    nlohmann::json rec;
    rec["method"] = out.record.method;
    rec["setting"] = out.record.setting;
    rec["seed"] = out.record.seed;
    rec["wer_target_test"] = out.record.wer_target_test;
    rec["wer_source_test"] = out.record.wer_source_test;
    rec["best_dev_wer"] = out.record.best_dev_wer;
    rec["steps"] = out.record.steps;
    rec["diverged"] = out.record.diverged;
    std::ofstream os(run_dir / "record.json", std::ios::binary);
    os << rec.dump(2) << '\n';
  }
  return out;
}

std::vector<RunRecord> run_sweep(Runner* runner, const SweepOptions& opts) {
  if (opts.axis != "gamma" && opts.axis != "delta" && opts.axis != "fraction")
    throw ConfigError("sweep axis must be gamma, delta or fraction");
  if (opts.values.empty()) throw ConfigError("sweep needs at least one value");
  if (opts.seeds.empty()) throw ConfigError("sweep needs at least one seed");

  std::vector<RunRecord> records;
  const ExperimentConfig base = runner->config();

  auto setting_for = [&](double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%s=%g", opts.axis.c_str(), v);
    return std::string(buf);
  };

  // A failed point is recorded and the sweep moves on, so one divergent
  // setting cannot lose the rest of the grid.
  auto guarded = [&](Method method, std::uint64_t seed,
                     const ExperimentConfig& cfg, const std::string& setting) {
    try {
      records.push_back(runner->run(method, seed, cfg, setting).record);
    } catch (const std::exception& e) {
      std::cerr << "sweep point " << method_name(method) << " " << setting
                << " seed " << seed << " failed: " << e.what() << "\n";
      RunRecord r;
      r.method = method_name(method);
      r.setting = setting;
      r.seed = seed;
      r.wer_target_test = std::numeric_limits<double>::quiet_NaN();
      r.wer_source_test = std::numeric_limits<double>::quiet_NaN();
      r.best_dev_wer = std::numeric_limits<double>::quiet_NaN();
      r.diverged = true;
      records.push_back(std::move(r));
    }
  };

  for (std::uint64_t seed : opts.seeds) {
    if (opts.include_references) {
      guarded(Method::ft, seed, base, "reference");
      guarded(Method::m2ds2, seed, base, "reference");
    }
    for (double v : opts.values) {
      ExperimentConfig cfg = base;
      if (opts.axis == "gamma") {
        cfg.stage2.gamma = v;
        cfg.stage2.delta = opts.fixed_other;
      } else if (opts.axis == "delta") {
        cfg.stage2.delta = v;
        cfg.stage2.gamma = opts.fixed_other;
      } else {
        if (!(v > 0.0 && v <= 1.0))
          throw ConfigError("fraction values must be in (0, 1]");
        cfg.target_fraction = v;
        guarded(Method::m2ds2, seed, cfg, setting_for(v));
      }
      guarded(Method::msda, seed, cfg, setting_for(v));
    }
  }
  return records;
}

void write_records_csv(const std::filesystem::path& path,
                       const std::vector<RunRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path.string());
  os << "method,setting,seed,wer_target_test,wer_source_test,best_dev_wer,steps,diverged\n";
  char buf[64];
  for (const auto& r : records) {
    os << r.method << ',' << r.setting << ',' << r.seed << ',';
    std::snprintf(buf, sizeof(buf), "%.6f", r.wer_target_test);
    os << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.6f", r.wer_source_test);
    os << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.6f", r.best_dev_wer);
    os << buf << ',' << r.steps << ',' << (r.diverged ? 1 : 0) << '\n';
  }
  if (!os) throw DataError("failed writing " + path.string());
}

std::vector<RunRecord> read_records_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw DataError("empty records file " + path.string());
  std::vector<RunRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f;
    RunRecord r;
    auto next = [&]() {
      if (!std::getline(ss, f, ',')) throw DataError("bad records row: " + line);
      return f;
    };
    r.method = next();
    r.setting = next();
    r.seed = std::stoull(next());
    r.wer_target_test = std::stod(next());
    r.wer_source_test = std::stod(next());
    r.best_dev_wer = std::stod(next());
    r.steps = std::stol(next());
    r.diverged = std::stoi(next()) != 0;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace msda::pipeline
