// model/checkpoint.cpp

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

#include "msda/model/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "msda/error.hpp"

namespace msda::model {
namespace {

constexpr char kMagic[4] = {'M', 'S', 'D', 'C'};
constexpr std::uint32_t kFormatVersion = 1;

}  // namespace

void save_blob_file(const std::filesystem::path& path, const BlobFile& blob) {
  nlohmann::json manifest;
  manifest["extras"] = blob.extras;
  nlohmann::json tensors = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, entry] : blob.tensors) {
    const auto& [shape, values] = entry;
    if (autodiff::shape_numel(shape) != values.size()) {
      throw CheckpointError("save: tensor '" + name + "' shape/size mismatch");
    }
    nlohmann::json t;
    t["name"] = name;
    t["shape"] = shape;
    t["offset"] = offset;
    t["count"] = values.size();
    tensors.push_back(std::move(t));
    offset += values.size();
  }
  manifest["tensors"] = std::move(tensors);
  const std::string mtext = manifest.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw CheckpointError("cannot open for write: " + path.string());
  os.write(kMagic, 4);
  std::uint32_t ver = kFormatVersion;
  char buf[8];
  std::memcpy(buf, &ver, 4);
  os.write(buf, 4);
  std::uint64_t jlen = mtext.size();
  std::memcpy(buf, &jlen, 8);
  os.write(buf, 8);
  os.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
  for (const auto& [name, entry] : blob.tensors) {
    (void)name;
    const auto& values = entry.second;
    os.write(reinterpret_cast<const char*>(values.data()),
             static_cast<std::streamsize>(values.size() * sizeof(double)));
  }
  if (!os) throw CheckpointError("write failed: " + path.string());
}

BlobFile load_blob_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open: " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw CheckpointError("bad magic in checkpoint: " + path.string());
  }
  char buf[8];
  if (!is.read(buf, 4)) throw CheckpointError("truncated: " + path.string());
  std::uint32_t ver;
  std::memcpy(&ver, buf, 4);
  if (ver != kFormatVersion) {
    throw CheckpointError("unsupported checkpoint version " +
                          std::to_string(ver) + ": " + path.string());
  }
  if (!is.read(buf, 8)) throw CheckpointError("truncated: " + path.string());
  std::uint64_t jlen;
  std::memcpy(&jlen, buf, 8);
  if (jlen > (1ULL << 30)) {
    throw CheckpointError("implausible manifest size: " + path.string());
  }
  std::string mtext(jlen, '\0');
  if (!is.read(mtext.data(), static_cast<std::streamsize>(jlen))) {
    throw CheckpointError("truncated manifest: " + path.string());
  }
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(mtext);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("malformed manifest in " + path.string() + ": " +
                          e.what());
  }

  BlobFile blob;
  blob.extras = manifest.value("extras", nlohmann::json::object());
  for (const auto& t : manifest.at("tensors")) {
    const std::string name = t.at("name").get<std::string>();
    autodiff::Shape shape = t.at("shape").get<autodiff::Shape>();
    const std::uint64_t count = t.at("count").get<std::uint64_t>();
    if (autodiff::shape_numel(shape) != count) {
      throw CheckpointError("manifest shape/count mismatch for '" + name +
                            "' in " + path.string());
    }
    std::vector<double> values(count);
    if (!is.read(reinterpret_cast<char*>(values.data()),
                 static_cast<std::streamsize>(count * sizeof(double)))) {
      throw CheckpointError("truncated blob for '" + name + "' in " +
                            path.string());
    }
    blob.tensors.emplace(name,
                         std::make_pair(std::move(shape), std::move(values)));
  }
  return blob;
}

nlohmann::json config_to_json(const ModelConfig& c) {
  return nlohmann::json{{"input_channels", c.input_channels},
                        {"encoder_dim", c.encoder_dim},
                        {"conv_kernel", c.conv_kernel},
                        {"downsample_factor", c.downsample_factor},
                        {"context_layers", c.context_layers},
                        {"attention_heads", c.attention_heads},
                        {"ffn_dim", c.ffn_dim},
                        {"codebook_groups", c.codebook_groups},
                        {"codebook_entries", c.codebook_entries},
                        {"codevector_dim", c.codevector_dim},
                        {"vocab_size", c.vocab_size},
                        {"mask_prob", c.mask_prob},
                        {"mask_span", c.mask_span},
                        {"num_distractors", c.num_distractors},
                        {"contrastive_temp", c.contrastive_temp},
                        {"gumbel_temp_start", c.gumbel_temp_start},
                        {"gumbel_temp_end", c.gumbel_temp_end},
                        {"gumbel_temp_decay", c.gumbel_temp_decay},
                        {"gumbel_hard", c.gumbel_hard},
                        {"diversity_weight", c.diversity_weight},
                        {"ssl_include_diversity", c.ssl_include_diversity},
                        {"position_encoding", c.position_encoding},
                        {"layer_norm_eps", c.layer_norm_eps}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.input_channels = j.at("input_channels").get<int>();
  c.encoder_dim = j.at("encoder_dim").get<int>();
  c.conv_kernel = j.at("conv_kernel").get<int>();
  c.downsample_factor = j.at("downsample_factor").get<int>();
  c.context_layers = j.at("context_layers").get<int>();
  c.attention_heads = j.at("attention_heads").get<int>();
  c.ffn_dim = j.at("ffn_dim").get<int>();
  c.codebook_groups = j.at("codebook_groups").get<int>();
  c.codebook_entries = j.at("codebook_entries").get<int>();
  c.codevector_dim = j.at("codevector_dim").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.mask_prob = j.at("mask_prob").get<double>();
  c.mask_span = j.at("mask_span").get<int>();
  c.num_distractors = j.at("num_distractors").get<int>();
  c.contrastive_temp = j.at("contrastive_temp").get<double>();
  c.gumbel_temp_start = j.at("gumbel_temp_start").get<double>();
  c.gumbel_temp_end = j.at("gumbel_temp_end").get<double>();
  c.gumbel_temp_decay = j.at("gumbel_temp_decay").get<double>();
  c.gumbel_hard = j.at("gumbel_hard").get<bool>();
  c.diversity_weight = j.at("diversity_weight").get<double>();
  c.ssl_include_diversity = j.at("ssl_include_diversity").get<bool>();
  c.position_encoding = j.at("position_encoding").get<std::string>();
  c.layer_norm_eps = j.at("layer_norm_eps").get<double>();
  c.validate();
  return c;
}

void save_model(const std::filesystem::path& path, const Params& params,
                nlohmann::json extras) {
  BlobFile blob;
  extras["model_config"] = config_to_json(params.config);
  blob.extras = std::move(extras);
  for (const auto& [name, t] : params.tensors) {
    blob.tensors.emplace(
        name, std::make_pair(t.shape(), std::vector<double>(t.value().begin(),
                                                            t.value().end())));
  }
  save_blob_file(path, blob);
}

Params load_model(const std::filesystem::path& path,
                  nlohmann::json* extras_out) {
  BlobFile blob = load_blob_file(path);
  if (!blob.extras.contains("model_config")) {
    throw CheckpointError("checkpoint lacks model_config: " + path.string());
  }
  Params params;
  params.config = config_from_json(blob.extras.at("model_config"));
  // Validate against a freshly initialized parameter set: same names, same
  // shapes, nothing missing or extra.
  Params reference = init_params(params.config, Rng(0));
  for (const auto& [name, ref] : reference.tensors) {
    auto it = blob.tensors.find(name);
    if (it == blob.tensors.end()) {
      throw CheckpointError("checkpoint missing tensor '" + name + "': " +
                            path.string());
    }
    if (it->second.first != ref.shape()) {
      throw CheckpointError("checkpoint tensor '" + name + "' has shape " +
                            autodiff::shape_str(it->second.first) +
                            ", expected " + autodiff::shape_str(ref.shape()));
    }
    params.tensors.emplace(name,
                           autodiff::Tensor::leaf(it->second.first,
                                                  std::move(it->second.second),
                                                  true));
  }
  for (const auto& [name, entry] : blob.tensors) {
    (void)entry;
    if (!reference.tensors.count(name)) {
      throw CheckpointError("checkpoint has unexpected tensor '" + name +
                            "': " + path.string());
    }
  }
  if (extras_out) *extras_out = std::move(blob.extras);
  return params;
}

}  // namespace msda::model
