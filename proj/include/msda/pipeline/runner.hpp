// msda/pipeline/runner.hpp

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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "msda/pipeline/config.hpp"
#include "msda/pipeline/trainer.hpp"

namespace msda::pipeline {

// Training recipes. ft and cpt are single-model baselines; *_mp variants add
// the teacher/student stage on top with the teacher anchored purely by source
// CTC; msda uses small dual anchors; the ssl variants swap objective parts.
enum class Method {
  ft,               // supervised fine-tuning on source
  cpt,              // target-SSL continued pretraining, then ft
  m2ds2,            // mixed supervised + dual-domain SSL
  ft_mp,            // ft teacher, then teacher/student (gamma=1, delta=0)
  m2ds2_mp,         // m2ds2 teacher, then teacher/student (gamma=1, delta=0)
  msda,             // m2ds2 teacher, then teacher/student with small anchors
  msda_ssl_teacher, // msda with the teacher anchored by SSL terms instead
  msda_ssl_student, // msda with target SSL added to the student
};

Method method_from_name(const std::string& name);
const char* method_name(Method m);
bool method_uses_stage2(Method m);
std::vector<Method> all_methods();

// Rejects overrides that the chosen method ignores, so a sweep cannot
// silently run the wrong experiment. Keys are dotted config paths.
void reject_unused_overrides(Method m, const std::vector<std::string>& keys);

struct RunRecord {
  std::string method;
  std::string setting = "full";
  std::uint64_t seed = 0;
  double wer_target_test = 0.0;  // percent
  double wer_source_test = 0.0;  // percent
  double best_dev_wer = 0.0;     // fraction, selection split
  long steps = 0;
  bool diverged = false;
};

struct RunOutput {
  RunRecord record;
  model::Params params;  // deliverable model (best by the stage's dev split)
};

// Executes methods over one source/target corpus pair. Stage 1 results are
// cached per (mode, alpha, beta, seed, fraction), so method families sharing
// a first stage train it once.
class Runner {
 public:
  Runner(const data::Corpus* source, const data::Corpus* target,
         ExperimentConfig cfg);

  // When set, each run writes metrics, the resolved config, the model
  // checkpoint and the run record under out_dir/<method>_<setting>_seed<k>/.
  void set_output_dir(std::filesystem::path dir) { out_dir_ = std::move(dir); }
  void set_resume(bool resume) { resume_ = resume; }

  RunOutput run(Method method, std::uint64_t seed);
  RunOutput run(Method method, std::uint64_t seed, const ExperimentConfig& cfg,
                const std::string& setting);

  const ExperimentConfig& config() const { return cfg_; }

 private:
  const data::Corpus* source_;
  const data::Corpus* target_;
  ExperimentConfig cfg_;
  std::filesystem::path out_dir_;
  bool resume_ = false;
  std::map<std::string, std::shared_ptr<Stage1Result>> stage1_cache_;
  std::map<std::string, std::shared_ptr<data::Corpus>> fraction_cache_;
};

struct SweepOptions {
  std::string axis;  // "gamma" | "delta" | "fraction"
  std::vector<double> values;
  std::vector<std::uint64_t> seeds;
  bool include_references = true;  // add ft / m2ds2 baseline rows
  // For a gamma sweep the delta coefficient is held at this value and vice
  // versa, so each axis is probed in isolation. Ignored for fraction sweeps.
  double fixed_other = 1e-3;
};

std::vector<RunRecord> run_sweep(Runner* runner, const SweepOptions& opts);

void write_records_csv(const std::filesystem::path& path,
                       const std::vector<RunRecord>& records);
std::vector<RunRecord> read_records_csv(const std::filesystem::path& path);

}  // namespace msda::pipeline
