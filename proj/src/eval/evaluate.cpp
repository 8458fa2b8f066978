// eval/evaluate.cpp

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

#include "msda/eval/evaluate.hpp"

#include "msda/autodiff/tensor.hpp"
#include "msda/error.hpp"
#include "msda/eval/decode.hpp"
#include "msda/rng.hpp"

namespace msda::eval {

namespace {

// Labels are 1-based (0 is the blank); vocab is 0-based over words.
std::string labels_to_text(const std::vector<int>& labels,
                           const std::vector<std::string>& vocab) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int w = labels[i] - 1;
    if (w < 0 || w >= static_cast<int>(vocab.size()))
      throw ValueError("label outside vocabulary: " + std::to_string(labels[i]));
    if (i > 0) out += ' ';
    out += vocab[static_cast<std::size_t>(w)];
  }
  return out;
}

}  // namespace

EvalReport evaluate_corpus(const model::Params& params,
                           const std::vector<const data::Utterance*>& utts,
                           const std::vector<std::string>& vocab) {
  autodiff::NoGradGuard ng;
  EvalReport report;
  model::ForwardOptions opts;
  for (const auto* u : utts) {
    auto fwd = model::forward_utterance(params, u->features, u->frames,
                                        u->channels, opts, Rng(0));
    auto hyp = greedy_decode(fwd.ctc_log_probs.value(), fwd.frames_out,
                             params.config.vocab_size);
    UttResult row;
    row.id = u->id;
    row.reference = labels_to_text(u->labels, vocab);
    row.hypothesis = labels_to_text(hyp, vocab);
    row.edits = wer_align(u->labels, hyp);
    row.reference_tokens = static_cast<int>(u->labels.size());
    report.reference_tokens += row.reference_tokens;
    report.substitutions += row.edits.substitutions;
    report.deletions += row.edits.deletions;
    report.insertions += row.edits.insertions;
    report.rows.push_back(std::move(row));
  }
  if (report.reference_tokens > 0) {
    report.wer_fraction =
        static_cast<double>(report.substitutions + report.deletions +
                            report.insertions) /
        static_cast<double>(report.reference_tokens);
  }
  return report;
}

}  // namespace msda::eval
