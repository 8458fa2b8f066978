// tests/test_data.cpp

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

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "msda/data/data.hpp"
#include "msda/error.hpp"

using namespace msda;
namespace fs = std::filesystem;

namespace {

data::SynthConfig small_cfg() {
  data::SynthConfig cfg;
  cfg.vocab_size = 6;
  cfg.channels = 4;
  cfg.utterances_per_domain = 40;
  cfg.seed = 321;
  return cfg;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("msda_data_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::vector<char>(std::istreambuf_iterator<char>(in),
                           std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("generation is deterministic and domains differ") {
  auto cfg = small_cfg();
  auto a = data::generate_domain(cfg, data::Domain::source);
  auto b = data::generate_domain(cfg, data::Domain::source);
  REQUIRE(a.utterances.size() == b.utterances.size());
  for (std::size_t i = 0; i < a.utterances.size(); ++i) {
    CHECK(a.utterances[i].id == b.utterances[i].id);
    CHECK(a.utterances[i].labels == b.utterances[i].labels);
    CHECK(a.utterances[i].features == b.utterances[i].features);
  }
  auto t = data::generate_domain(cfg, data::Domain::target);
  CHECK(t.domain == data::Domain::target);
  CHECK(t.vocab == a.vocab);
  // Same task, different surface statistics.
  bool any_diff = false;
  for (std::size_t i = 0; i < std::min(a.utterances.size(), t.utterances.size());
       ++i) {
    if (a.utterances[i].features != t.utterances[i].features) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("utterance invariants hold") {
  auto cfg = small_cfg();
  auto c = data::generate_domain(cfg, data::Domain::source);
  REQUIRE(static_cast<int>(c.utterances.size()) == cfg.utterances_per_domain);
  REQUIRE(static_cast<int>(c.vocab.size()) == cfg.vocab_size);
  std::set<std::string> ids;
  for (const auto& u : c.utterances) {
    ids.insert(u.id);
    CHECK(u.channels == cfg.channels);
    CHECK(u.frames >= cfg.min_words * cfg.min_frames_per_word);
    CHECK(u.frames <= cfg.max_words * cfg.max_frames_per_word);
    CHECK(static_cast<std::size_t>(u.frames) * u.channels == u.features.size());
    CHECK(static_cast<int>(u.labels.size()) >= cfg.min_words);
    CHECK(static_cast<int>(u.labels.size()) <= cfg.max_words);
    for (int l : u.labels) {
      CHECK(l >= 1);  // 0 is reserved for blank
      CHECK(l <= cfg.vocab_size);
    }
    for (double v : u.features) CHECK(std::isfinite(v));
    // Text round-trips through the vocab.
    std::string joined;
    for (std::size_t i = 0; i < u.labels.size(); ++i) {
      if (i) joined += ' ';
      joined += c.vocab[static_cast<std::size_t>(u.labels[i]) - 1];
    }
    CHECK(joined == u.text);
  }
  CHECK(ids.size() == c.utterances.size());
}

TEST_CASE("split fractions and views") {
  auto cfg = small_cfg();
  cfg.utterances_per_domain = 100;
  auto c = data::generate_domain(cfg, data::Domain::source);
  auto train = c.split_view(data::Split::train);
  auto dev = c.split_view(data::Split::dev);
  auto test = c.split_view(data::Split::test);
  CHECK(train.size() + dev.size() + test.size() == c.utterances.size());
  // Splits come from a per-utterance hash, so sizes are approximate.
  CHECK(dev.size() >= 3);
  CHECK(dev.size() <= 25);
  CHECK(test.size() >= 3);
  CHECK(test.size() <= 25);
  CHECK(train.size() >= 60);
  CHECK(c.split_hours(data::Split::train) > 0.0);
  // Hours are frames * frame_seconds summed over the split.
  double expect = 0.0;
  for (const auto* u : dev) expect += u->frames * c.frame_seconds / 3600.0;
  CHECK(c.split_hours(data::Split::dev) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("corpus write and load round-trips exactly") {
  auto cfg = small_cfg();
  auto c = data::generate_domain(cfg, data::Domain::target);
  TempDir dir;
  data::write_corpus(c, dir.path);
  auto back = data::load_corpus(dir.path);
  CHECK(back.domain == c.domain);
  CHECK(back.vocab == c.vocab);
  CHECK(back.frame_seconds == c.frame_seconds);
  REQUIRE(back.utterances.size() == c.utterances.size());
  for (std::size_t i = 0; i < c.utterances.size(); ++i) {
    const auto& x = c.utterances[i];
    const auto& y = back.utterances[i];
    CHECK(y.id == x.id);
    CHECK(y.domain == x.domain);
    CHECK(y.split == x.split);
    CHECK(y.frames == x.frames);
    CHECK(y.channels == x.channels);
    CHECK(y.labels == x.labels);
    CHECK(y.text == x.text);
    CHECK(y.features == x.features);  // bit-exact through the binary format
  }
  // Writing the same corpus twice produces byte-identical files.
  TempDir dir2;
  data::write_corpus(c, dir2.path);
  CHECK(slurp(dir.path / "manifest.jsonl") == slurp(dir2.path / "manifest.jsonl"));
  CHECK(slurp(dir.path / "vocab.json") == slurp(dir2.path / "vocab.json"));
}

TEST_CASE("feature file format is validated") {
  TempDir dir;
  const fs::path p = dir.path / "x.bin";
  std::vector<double> feats = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  data::write_features(p, feats, 3, 2);
  auto f = data::read_features(p);
  CHECK(f.frames == 3);
  CHECK(f.channels == 2);
  CHECK(f.features == feats);

  // Wrong magic.
  {
    auto bytes = slurp(p);
    bytes[0] = 'X';
    std::ofstream out(dir.path / "bad_magic.bin", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_AS(data::read_features(dir.path / "bad_magic.bin"), DataError);

  // Truncated payload.
  {
    auto bytes = slurp(p);
    bytes.resize(bytes.size() - 8);
    std::ofstream out(dir.path / "short.bin", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_AS(data::read_features(dir.path / "short.bin"), DataError);

  // Missing file.
  CHECK_THROWS_AS(data::read_features(dir.path / "nope.bin"), DataError);

  // Dimension mismatch on write.
  CHECK_THROWS_AS(data::write_features(dir.path / "y.bin", feats, 4, 2),
                  DataError);
}

TEST_CASE("load_corpus rejects a missing directory") {
  CHECK_THROWS_AS(data::load_corpus("/nonexistent/msda/corpus"), DataError);
}

TEST_CASE("subsample keeps a deterministic fraction") {
  auto cfg = small_cfg();
  cfg.utterances_per_domain = 100;
  auto c = data::generate_domain(cfg, data::Domain::source);
  auto train = c.split_view(data::Split::train);
  auto half = data::subsample(train, 0.5, 7);
  CHECK(half.size() == (train.size() + 1) / 2);
  auto again = data::subsample(train, 0.5, 7);
  REQUIRE(half.size() == again.size());
  for (std::size_t i = 0; i < half.size(); ++i) CHECK(half[i] == again[i]);
  auto other = data::subsample(train, 0.5, 8);
  bool differs = other.size() != half.size();
  for (std::size_t i = 0; !differs && i < half.size(); ++i)
    differs = half[i] != other[i];
  CHECK(differs);
  // Subset property.
  std::set<const data::Utterance*> all(train.begin(), train.end());
  for (const auto* u : half) CHECK(all.count(u) == 1);
  // Full fraction keeps everything; tiny fraction keeps at least one.
  CHECK(data::subsample(train, 1.0, 3).size() == train.size());
  CHECK(data::subsample(train, 1e-9, 3).size() == 1);
  CHECK_THROWS_AS(data::subsample(train, 0.0, 3), ValueError);
  CHECK_THROWS_AS(data::subsample(train, 1.5, 3), ValueError);
}

TEST_CASE("name round-trips for domain and split") {
  CHECK(data::domain_from_name(data::domain_name(data::Domain::source)) ==
        data::Domain::source);
  CHECK(data::domain_from_name(data::domain_name(data::Domain::target)) ==
        data::Domain::target);
  for (auto s : {data::Split::train, data::Split::dev, data::Split::test}) {
    CHECK(data::split_from_name(data::split_name(s)) == s);
  }
  CHECK_THROWS_AS(data::domain_from_name("mars"), DataError);
  CHECK_THROWS_AS(data::split_from_name("holdout"), DataError);
}
