// data/manifest.cpp

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

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "json.hpp"
#include "msda/data/data.hpp"
#include "msda/error.hpp"

namespace msda::data {
namespace {

constexpr char kMagic[4] = {'M', 'S', 'D', 'A'};
constexpr std::uint32_t kFeatureVersion = 1;

void put_u32(std::ofstream& os, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  os.write(buf, 4);
}

std::uint32_t get_u32(std::ifstream& is, const std::filesystem::path& path) {
  char buf[4];
  if (!is.read(buf, 4)) {
    throw DataError("feature file truncated: " + path.string());
  }
  std::uint32_t v;
  std::memcpy(&v, buf, 4);
  return v;
}

}  // namespace

const char* domain_name(Domain d) {
  return d == Domain::source ? "source" : "target";
}

Domain domain_from_name(const std::string& name) {
  if (name == "source") return Domain::source;
  if (name == "target") return Domain::target;
  throw DataError("unknown domain '" + name + "'");
}

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    default: return "test";
  }
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "dev") return Split::dev;
  if (name == "test") return Split::test;
  throw DataError("unknown split '" + name + "'");
}

std::vector<const Utterance*> Corpus::split_view(Split s) const {
  std::vector<const Utterance*> out;
  for (const Utterance& u : utterances) {
    if (u.split == s) out.push_back(&u);
  }
  return out;
}

double Corpus::split_hours(Split s) const {
  double seconds = 0.0;
  for (const Utterance& u : utterances) {
    if (u.split == s) seconds += frame_seconds * u.frames;
  }
  return seconds / 3600.0;
}

void write_features(const std::filesystem::path& path,
                    std::span<const double> features, int frames,
                    int channels) {
  if (static_cast<std::size_t>(frames) * channels != features.size()) {
    throw DataError("write_features: size mismatch for " + path.string());
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for write: " + path.string());
  os.write(kMagic, 4);
  put_u32(os, kFeatureVersion);
  put_u32(os, static_cast<std::uint32_t>(frames));
  put_u32(os, static_cast<std::uint32_t>(channels));
  os.write(reinterpret_cast<const char*>(features.data()),
           static_cast<std::streamsize>(features.size() * sizeof(double)));
  if (!os) throw DataError("write failed: " + path.string());
}

FeatureFile read_features(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError("bad magic in feature file: " + path.string());
  }
  const std::uint32_t version = get_u32(is, path);
  if (version != kFeatureVersion) {
    throw DataError("unsupported feature file version " +
                    std::to_string(version) + ": " + path.string());
  }
  FeatureFile f;
  f.frames = static_cast<int>(get_u32(is, path));
  f.channels = static_cast<int>(get_u32(is, path));
  if (f.frames < 1 || f.channels < 1 || f.frames > (1 << 24) ||
      f.channels > (1 << 16)) {
    throw DataError("implausible dimensions in feature file: " + path.string());
  }
  f.features.resize(static_cast<std::size_t>(f.frames) * f.channels);
  if (!is.read(reinterpret_cast<char*>(f.features.data()),
               static_cast<std::streamsize>(f.features.size() * sizeof(double)))) {
    throw DataError("feature file truncated: " + path.string());
  }
  return f;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "feats");

  nlohmann::json vocab_json;
  vocab_json["domain"] = domain_name(corpus.domain);
  vocab_json["frame_seconds"] = corpus.frame_seconds;
  vocab_json["vocab"] = corpus.vocab;
  std::ofstream vocab_os(dir / "vocab.json");
  if (!vocab_os) throw DataError("cannot write " + (dir / "vocab.json").string());
  vocab_os << vocab_json.dump(2) << "\n";

  std::ofstream man(dir / "manifest.jsonl");
  if (!man) throw DataError("cannot write " + (dir / "manifest.jsonl").string());
  for (const Utterance& u : corpus.utterances) {
    const std::string rel = "feats/" + u.id + ".bin";
    write_features(dir / rel, u.features, u.frames, u.channels);
    nlohmann::json line;
    line["id"] = u.id;
    line["split"] = split_name(u.split);
    line["text"] = u.text;
    line["labels"] = u.labels;
    line["frames"] = u.frames;
    line["channels"] = u.channels;
    line["duration_seconds"] = u.frames * corpus.frame_seconds;
    line["features"] = rel;
    man << line.dump() << "\n";
  }
}

Corpus load_corpus(const std::filesystem::path& dir) {
  std::ifstream vocab_is(dir / "vocab.json");
  if (!vocab_is) {
    throw DataError("missing " + (dir / "vocab.json").string());
  }
  nlohmann::json vocab_json;
  try {
    vocab_is >> vocab_json;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed vocab.json in " + dir.string() + ": " + e.what());
  }

  Corpus corpus;
  corpus.domain = domain_from_name(vocab_json.at("domain").get<std::string>());
  corpus.frame_seconds = vocab_json.at("frame_seconds").get<double>();
  corpus.vocab = vocab_json.at("vocab").get<std::vector<std::string>>();
  if (corpus.vocab.empty()) throw DataError("empty vocab in " + dir.string());

  std::ifstream man(dir / "manifest.jsonl");
  if (!man) throw DataError("missing " + (dir / "manifest.jsonl").string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(man, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("malformed manifest line " + std::to_string(line_no) +
                      " in " + dir.string() + ": " + e.what());
    }
    Utterance u;
    u.id = j.at("id").get<std::string>();
    u.domain = corpus.domain;
    u.split = split_from_name(j.at("split").get<std::string>());
    u.text = j.at("text").get<std::string>();
    u.labels = j.at("labels").get<std::vector<int>>();
    for (int l : u.labels) {
      if (l < 1 || l > static_cast<int>(corpus.vocab.size())) {
        throw DataError("label out of vocabulary in utterance " + u.id);
      }
    }
    FeatureFile f = read_features(dir / j.at("features").get<std::string>());
    if (f.frames != j.at("frames").get<int>() ||
        f.channels != j.at("channels").get<int>()) {
      throw DataError("manifest/feature dimension mismatch for " + u.id);
    }
    u.frames = f.frames;
    u.channels = f.channels;
    u.features = std::move(f.features);
    corpus.utterances.push_back(std::move(u));
  }
  if (corpus.utterances.empty()) {
    throw DataError("empty manifest in " + dir.string());
  }
  return corpus;
}

}  // namespace msda::data
