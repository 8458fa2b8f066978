// msda/pipeline/trainer.hpp

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
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "msda/augment/specaugment.hpp"
#include "msda/data/data.hpp"
#include "msda/losses/losses.hpp"
#include "msda/model/model.hpp"
#include "msda/pipeline/metrics.hpp"
#include "msda/pipeline/optimizer.hpp"

namespace msda::pipeline {

// What the mixed pretraining stage optimizes.
//   mixed:           source CTC + alpha * source SSL + beta * target SSL
//   supervised_only: source CTC alone (plain fine-tuning)
//   ssl_target_only: target SSL alone (continued pretraining phase)
enum class Stage1Mode { mixed, supervised_only, ssl_target_only };

const char* stage1_mode_name(Stage1Mode mode);

struct Stage1Config {
  Stage1Mode mode = Stage1Mode::mixed;
  double alpha = 0.01;
  double beta = 0.02;
  int epochs = 6;
  int batch_size = 8;
  AdamWConfig optim;
  augment::SpecAugmentConfig specaugment;
  int divergence_patience = 10;
};

// Teacher update rule in the teacher/student stage.
//   anchored: h * CTC(target, pseudo) + gamma * CTC(source, y) + delta * diversity(target)
//   ssl:      h * CTC(target, pseudo) + SSL(source) + SSL(target)
enum class TeacherObjective { anchored, ssl };

// Student update rule in the teacher/student stage.
//   ctc:     CTC(target, pseudo)
//   ctc_ssl: CTC(target, pseudo) + SSL(target)
enum class StudentObjective { ctc, ctc_ssl };

struct Stage2Config {
  double gamma = 1e-4;
  double delta = 1e-4;
  TeacherObjective teacher = TeacherObjective::anchored;
  StudentObjective student = StudentObjective::ctc;
  int epochs = 4;
  int batch_size = 8;
  AdamWConfig teacher_optim;
  AdamWConfig student_optim;
  augment::SpecAugmentConfig specaugment;
  int divergence_patience = 10;
  // Continues the quantizer temperature schedule from a previous stage.
  long step_offset = 0;
};

struct TrainStats {
  long steps = 0;
  int epochs_done = 0;
  double best_dev_wer = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  long ctc_skipped_utterances = 0;
  long augmented_teacher_batches = 0;
  long augmented_student_batches = 0;
  bool diverged = false;
  std::string divergence_message;
};

struct StepInfo {
  long step = 0;
  int epoch = 0;
  losses::LossBundle* bundle = nullptr;          // main (stage 1) or teacher (stage 2)
  losses::LossBundle* student_bundle = nullptr;  // stage 2 only
  double h = 0.0;                                // stage 2 only
};

// Test instrumentation; called after every optimizer step.
using StepHook = std::function<void(const StepInfo&)>;

struct Stage1Result {
  model::Params params;       // after the last epoch
  model::Params best_params;  // lowest source dev WER (== params in ssl mode)
  TrainStats stats;
};

struct Stage2Result {
  model::Params teacher;
  model::Params student;
  model::Params best_student;  // lowest target dev WER
  TrainStats stats;
};

Stage1Result train_stage1(const data::Corpus& source, const data::Corpus& target,
                          model::Params init, const Stage1Config& cfg,
                          std::uint64_t seed, MetricsWriter* metrics = nullptr,
                          const StepHook* hook = nullptr,
                          const std::filesystem::path* state_path = nullptr,
                          bool resume = false);

Stage2Result train_stage2(const data::Corpus& source, const data::Corpus& target,
                          model::Params teacher_init, const Stage2Config& cfg,
                          std::uint64_t seed, MetricsWriter* metrics = nullptr,
                          const StepHook* hook = nullptr);

// Greedy transcription of a batch with masking and augmentation disabled.
std::vector<std::vector<int>> pseudo_label(
    const model::Params& params,
    const std::vector<const data::Utterance*>& batch);

// Mean length-normalized CTC loss of a model over a labeled split, without
// building a gradient graph. Utterances too short to align are skipped.
double mean_ctc_loss(const model::Params& params,
                     const std::vector<const data::Utterance*>& utts);

}  // namespace msda::pipeline
