// msda/data/data.hpp

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
#include <span>
#include <string>
#include <vector>

#include "msda/rng.hpp"

namespace msda::data {

enum class Domain { source, target };
const char* domain_name(Domain d);
Domain domain_from_name(const std::string& name);

enum class Split { train, dev, test };
const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct Utterance {
  std::string id;
  Domain domain = Domain::source;
  Split split = Split::train;
  int frames = 0;
  int channels = 0;
  std::vector<double> features;  // row-major [frames x channels]
  std::vector<int> labels;       // token ids; 0 is reserved for blank
  std::string text;              // space-joined words
};

struct Corpus {
  Domain domain = Domain::source;
  std::vector<std::string> vocab;  // word for token id i + 1
  double frame_seconds = 0.02;
  std::vector<Utterance> utterances;

  std::vector<const Utterance*> split_view(Split s) const;
  double split_hours(Split s) const;
};

// Synthetic sequence task: utterances are word sequences; each word has a
// Gaussian channel prototype, each occurrence a fresh duration and jitter.
// The target domain differs by an affine channel map (rotation blended by
// shift_strength, per-channel scaling, bias) and a higher noise floor. Word
// prototypes are keyed by prototype_seed alone, so equal seeds mean both
// domains share word identities.
struct SynthConfig {
  int vocab_size = 20;
  int channels = 16;
  int utterances_per_domain = 480;
  int min_words = 3;
  int max_words = 8;
  int min_frames_per_word = 4;
  int max_frames_per_word = 8;
  double prototype_jitter = 0.08;
  double shift_strength = 1.0;
  double source_noise = 0.1;
  double target_noise = 0.3;
  double dev_fraction = 0.1;
  double test_fraction = 0.1;
  double frame_seconds = 0.02;
  std::uint64_t prototype_seed = 17;
  std::uint64_t seed = 1234;
};

Corpus generate_domain(const SynthConfig& cfg, Domain domain);

// Directory layout: <dir>/vocab.json, <dir>/manifest.jsonl,
// <dir>/feats/<id>.bin. Feature files: "MSDA" magic, u32 version, u32 frames,
// u32 channels, then frames*channels little-endian f64.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir);

void write_features(const std::filesystem::path& path,
                    std::span<const double> features, int frames,
                    int channels);
struct FeatureFile {
  int frames = 0;
  int channels = 0;
  std::vector<double> features;
};
FeatureFile read_features(const std::filesystem::path& path);

// Deterministic fraction of a split (for sample-efficiency runs): keeps
// ceil(fraction * n) utterances chosen by a seeded shuffle.
std::vector<const Utterance*> subsample(std::vector<const Utterance*> utts,
                                        double fraction, std::uint64_t seed);

}  // namespace msda::data
