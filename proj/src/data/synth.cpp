// data/synth.cpp

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
#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "msda/data/data.hpp"
#include "msda/error.hpp"

namespace msda::data {
namespace {

constexpr std::array<const char*, 20> kBaseWords = {
    "alpha", "bravo",    "charlie", "delta",  "echo",   "foxtrot", "golf",
    "hotel", "india",    "juliett", "kilo",   "lima",   "mike",    "november",
    "oscar", "papa",     "quebec",  "romeo",  "sierra", "tango"};

std::vector<std::string> make_vocab(int n) {
  std::vector<std::string> vocab;
  vocab.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (i < static_cast<int>(kBaseWords.size())) {
      vocab.emplace_back(kBaseWords[static_cast<std::size_t>(i)]);
    } else {
      vocab.push_back("word" + std::to_string(i + 1));
    }
  }
  return vocab;
}

std::vector<double> word_prototype(std::uint64_t prototype_seed, int word,
                                   int channels) {
  Rng rng = Rng(prototype_seed).derive("proto").derive(
      static_cast<std::uint64_t>(word));
  std::vector<double> p(static_cast<std::size_t>(channels));
  for (double& v : p) v = rng.normal();
  return p;
}

// Orthonormalize rows in place (modified Gram-Schmidt).
void orthonormalize_rows(std::vector<double>& m, int c) {
  for (int i = 0; i < c; ++i) {
    double* ri = m.data() + static_cast<std::size_t>(i) * c;
    for (int j = 0; j < i; ++j) {
      const double* rj = m.data() + static_cast<std::size_t>(j) * c;
      double dot = 0.0;
      for (int k = 0; k < c; ++k) dot += ri[k] * rj[k];
      for (int k = 0; k < c; ++k) ri[k] -= dot * rj[k];
    }
    double norm = 0.0;
    for (int k = 0; k < c; ++k) norm += ri[k] * ri[k];
    norm = std::sqrt(norm);
    if (norm < 1e-12) {
      throw ValueError("orthonormalize_rows: degenerate basis");
    }
    for (int k = 0; k < c; ++k) ri[k] /= norm;
  }
}

struct ChannelMap {
  std::vector<double> matrix;  // [C x C], rotation times per-channel scale
  std::vector<double> bias;    // [C]
  double noise = 0.1;
};

ChannelMap domain_map(const SynthConfig& cfg, Domain domain) {
  const int c = cfg.channels;
  ChannelMap map;
  map.bias.assign(static_cast<std::size_t>(c), 0.0);
  map.noise = domain == Domain::source ? cfg.source_noise : cfg.target_noise;
  map.matrix.assign(static_cast<std::size_t>(c) * c, 0.0);
  for (int i = 0; i < c; ++i) map.matrix[static_cast<std::size_t>(i) * c + i] = 1.0;
  if (domain == Domain::source) return map;

  const double s = cfg.shift_strength;
  Rng rng = Rng(cfg.prototype_seed).derive("shift");
  std::vector<double> q(static_cast<std::size_t>(c) * c);
  for (double& v : q) v = rng.normal();
  orthonormalize_rows(q, c);
  // Blend the rotation toward identity by the shift strength, re-orthonormalize,
  // then fold in per-channel scaling: A = R * diag(d).
  std::vector<double> r(static_cast<std::size_t>(c) * c, 0.0);
  for (int i = 0; i < c; ++i) {
    for (int j = 0; j < c; ++j) {
      r[static_cast<std::size_t>(i) * c + j] =
          (1.0 - s) * (i == j ? 1.0 : 0.0) + s * q[static_cast<std::size_t>(i) * c + j];
    }
  }
  orthonormalize_rows(r, c);
  for (int j = 0; j < c; ++j) {
    const double d = 1.0 + s * (rng.uniform(0.7, 1.3) - 1.0);
    for (int i = 0; i < c; ++i) r[static_cast<std::size_t>(i) * c + j] *= d;
  }
  map.matrix = std::move(r);
  for (int i = 0; i < c; ++i) map.bias[static_cast<std::size_t>(i)] = s * 0.2 * rng.normal();
  return map;
}

double split_point(const std::string& id) {
  std::uint64_t h = Rng::fnv1a(id);
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

void validate_config(const SynthConfig& cfg) {
  if (cfg.vocab_size < 2 || cfg.channels < 2 || cfg.utterances_per_domain < 10) {
    throw ConfigError("gen-data: vocab_size >= 2, channels >= 2, and at least "
                      "10 utterances per domain required");
  }
  if (cfg.min_words < 1 || cfg.max_words < cfg.min_words ||
      cfg.min_frames_per_word < 1 ||
      cfg.max_frames_per_word < cfg.min_frames_per_word) {
    throw ConfigError("gen-data: bad word/duration ranges");
  }
  if (cfg.dev_fraction < 0 || cfg.test_fraction < 0 ||
      cfg.dev_fraction + cfg.test_fraction >= 0.9) {
    throw ConfigError("gen-data: dev/test fractions leave too little train data");
  }
}

}  // namespace

Corpus generate_domain(const SynthConfig& cfg, Domain domain) {
  validate_config(cfg);
  Corpus corpus;
  corpus.domain = domain;
  corpus.vocab = make_vocab(cfg.vocab_size);
  corpus.frame_seconds = cfg.frame_seconds;

  std::vector<std::vector<double>> protos;
  protos.reserve(static_cast<std::size_t>(cfg.vocab_size));
  for (int w = 0; w < cfg.vocab_size; ++w) {
    protos.push_back(word_prototype(cfg.prototype_seed, w, cfg.channels));
  }
  const ChannelMap map = domain_map(cfg, domain);
  const int c = cfg.channels;

  Rng domain_rng = Rng(cfg.seed).derive(domain_name(domain)).derive("utt");
  std::vector<double> raw(static_cast<std::size_t>(c));
  for (int n = 0; n < cfg.utterances_per_domain; ++n) {
    Rng rng = domain_rng.derive(static_cast<std::uint64_t>(n));
    Utterance utt;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s-%05d", domain_name(domain), n);
    utt.id = buf;
    utt.domain = domain;
    utt.channels = c;

    const int words =
        cfg.min_words + static_cast<int>(rng.uniform_below(
                            static_cast<std::uint64_t>(cfg.max_words - cfg.min_words + 1)));
    for (int wi = 0; wi < words; ++wi) {
      const int w = static_cast<int>(
          rng.uniform_below(static_cast<std::uint64_t>(cfg.vocab_size)));
      utt.labels.push_back(w + 1);
      if (wi) utt.text += ' ';
      utt.text += corpus.vocab[static_cast<std::size_t>(w)];
      const int dur = cfg.min_frames_per_word +
                      static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(
                          cfg.max_frames_per_word - cfg.min_frames_per_word + 1)));
      for (int f = 0; f < dur; ++f) {
        for (int ch = 0; ch < c; ++ch) {
          raw[static_cast<std::size_t>(ch)] =
              protos[static_cast<std::size_t>(w)][static_cast<std::size_t>(ch)] +
              cfg.prototype_jitter * rng.normal();
        }
        for (int i = 0; i < c; ++i) {
          double v = map.bias[static_cast<std::size_t>(i)];
          const double* row = map.matrix.data() + static_cast<std::size_t>(i) * c;
          for (int j = 0; j < c; ++j) v += row[j] * raw[static_cast<std::size_t>(j)];
          utt.features.push_back(v + map.noise * rng.normal());
        }
        ++utt.frames;
      }
    }

    const double u = split_point(utt.id);
    if (u < cfg.dev_fraction) {
      utt.split = Split::dev;
    } else if (u < cfg.dev_fraction + cfg.test_fraction) {
      utt.split = Split::test;
    } else {
      utt.split = Split::train;
    }
    corpus.utterances.push_back(std::move(utt));
  }
  return corpus;
}

std::vector<const Utterance*> subsample(std::vector<const Utterance*> utts,
                                        double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw ValueError("subsample: fraction must be in (0, 1]");
  }
  if (fraction == 1.0) return utts;
  Rng rng = Rng(seed).derive("subsample");
  rng.shuffle(utts);
  const std::size_t keep = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(utts.size())));
  utts.resize(keep > 0 ? keep : 1);
  std::sort(utts.begin(), utts.end(),
            [](const Utterance* a, const Utterance* b) { return a->id < b->id; });
  return utts;
}

}  // namespace msda::data
