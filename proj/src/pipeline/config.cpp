// pipeline/config.cpp

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

#include "msda/pipeline/config.hpp"

#include <fstream>

#include "msda/error.hpp"
#include "msda/model/checkpoint.hpp"

namespace msda::pipeline {

namespace {

nlohmann::json specaugment_to_json(const augment::SpecAugmentConfig& c) {
  return {{"enabled", c.enabled},
          {"time_masks", c.time_masks},
          {"time_mask_max", c.time_mask_max},
          {"channel_masks", c.channel_masks},
          {"channel_mask_max", c.channel_mask_max},
          {"mask_value", c.mask_value}};
}

augment::SpecAugmentConfig specaugment_from_json(const nlohmann::json& j) {
  augment::SpecAugmentConfig c;
  c.enabled = j.at("enabled").get<bool>();
  c.time_masks = j.at("time_masks").get<int>();
  c.time_mask_max = j.at("time_mask_max").get<int>();
  c.channel_masks = j.at("channel_masks").get<int>();
  c.channel_mask_max = j.at("channel_mask_max").get<int>();
  c.mask_value = j.at("mask_value").get<double>();
  return c;
}

nlohmann::json optim_to_json(const AdamWConfig& c) {
  return {{"lr", c.lr},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"eps", c.eps},
          {"weight_decay", c.weight_decay}};
}

AdamWConfig optim_from_json(const nlohmann::json& j) {
  AdamWConfig c;
  c.lr = j.at("lr").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.eps = j.at("eps").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  return c;
}

nlohmann::json data_to_json(const data::SynthConfig& c) {
  return {{"vocab_size", c.vocab_size},
          {"channels", c.channels},
          {"utterances_per_domain", c.utterances_per_domain},
          {"min_words", c.min_words},
          {"max_words", c.max_words},
          {"min_frames_per_word", c.min_frames_per_word},
          {"max_frames_per_word", c.max_frames_per_word},
          {"prototype_jitter", c.prototype_jitter},
          {"shift_strength", c.shift_strength},
          {"source_noise", c.source_noise},
          {"target_noise", c.target_noise},
          {"dev_fraction", c.dev_fraction},
          {"test_fraction", c.test_fraction},
          {"frame_seconds", c.frame_seconds},
          {"prototype_seed", c.prototype_seed},
          {"seed", c.seed}};
}

data::SynthConfig data_from_json(const nlohmann::json& j) {
  data::SynthConfig c;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.channels = j.at("channels").get<int>();
  c.utterances_per_domain = j.at("utterances_per_domain").get<int>();
  c.min_words = j.at("min_words").get<int>();
  c.max_words = j.at("max_words").get<int>();
  c.min_frames_per_word = j.at("min_frames_per_word").get<int>();
  c.max_frames_per_word = j.at("max_frames_per_word").get<int>();
  c.prototype_jitter = j.at("prototype_jitter").get<double>();
  c.shift_strength = j.at("shift_strength").get<double>();
  c.source_noise = j.at("source_noise").get<double>();
  c.target_noise = j.at("target_noise").get<double>();
  c.dev_fraction = j.at("dev_fraction").get<double>();
  c.test_fraction = j.at("test_fraction").get<double>();
  c.frame_seconds = j.at("frame_seconds").get<double>();
  c.prototype_seed = j.at("prototype_seed").get<std::uint64_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

nlohmann::json stage1_to_json(const Stage1Config& c) {
  return {{"alpha", c.alpha},
          {"beta", c.beta},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"divergence_patience", c.divergence_patience},
          {"optim", optim_to_json(c.optim)},
          {"specaugment", specaugment_to_json(c.specaugment)}};
}

Stage1Config stage1_from_json(const nlohmann::json& j) {
  Stage1Config c;
  c.alpha = j.at("alpha").get<double>();
  c.beta = j.at("beta").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.divergence_patience = j.at("divergence_patience").get<int>();
  c.optim = optim_from_json(j.at("optim"));
  c.specaugment = specaugment_from_json(j.at("specaugment"));
  return c;
}

nlohmann::json stage2_to_json(const Stage2Config& c) {
  return {{"gamma", c.gamma},
          {"delta", c.delta},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"divergence_patience", c.divergence_patience},
          {"teacher_optim", optim_to_json(c.teacher_optim)},
          {"student_optim", optim_to_json(c.student_optim)},
          {"specaugment", specaugment_to_json(c.specaugment)}};
}

Stage2Config stage2_from_json(const nlohmann::json& j) {
  Stage2Config c;
  c.gamma = j.at("gamma").get<double>();
  c.delta = j.at("delta").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.divergence_patience = j.at("divergence_patience").get<int>();
  c.teacher_optim = optim_from_json(j.at("teacher_optim"));
  c.student_optim = optim_from_json(j.at("student_optim"));
  c.specaugment = specaugment_from_json(j.at("specaugment"));
  return c;
}

std::string type_name(const nlohmann::json& v) {
  if (v.is_boolean()) return "boolean";
  if (v.is_number()) return "number";
  if (v.is_string()) return "string";
  if (v.is_object()) return "object";
  if (v.is_array()) return "array";
  return "null";
}

bool types_compatible(const nlohmann::json& given, const nlohmann::json& def) {
  if (def.is_boolean()) return given.is_boolean();
  if (def.is_number()) return given.is_number();
  if (def.is_string()) return given.is_string();
  if (def.is_object()) return given.is_object();
  return false;
}

void validate_against(const nlohmann::json& given, const nlohmann::json& def,
                      const std::string& prefix) {
  if (!given.is_object())
    throw ConfigError("config section '" + (prefix.empty() ? "<root>" : prefix) +
                      "' must be an object");
  for (auto it = given.begin(); it != given.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!def.contains(it.key())) throw ConfigError("unknown config key: " + path);
    const auto& dv = def.at(it.key());
    if (dv.is_object()) {
      validate_against(it.value(), dv, path);
    } else if (!types_compatible(it.value(), dv)) {
      throw ConfigError("config key " + path + " expects " + type_name(dv) +
                        ", got " + type_name(it.value()));
    }
  }
}

// Defaults overlaid with the given values (already validated).
nlohmann::json merge_defaults(const nlohmann::json& given, const nlohmann::json& def) {
  nlohmann::json out = def;
  for (auto it = given.begin(); it != given.end(); ++it) {
    if (def.at(it.key()).is_object()) {
      out[it.key()] = merge_defaults(it.value(), def.at(it.key()));
    } else {
      out[it.key()] = it.value();
    }
  }
  return out;
}

}  // namespace

nlohmann::json default_config_json() {
  return config_to_json(ExperimentConfig{});
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["seed"] = cfg.seed;
  j["target_fraction"] = cfg.target_fraction;
  j["data"] = data_to_json(cfg.data);
  j["model"] = model::config_to_json(cfg.model);
  j["stage1"] = stage1_to_json(cfg.stage1);
  j["stage2"] = stage2_to_json(cfg.stage2);
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  const nlohmann::json def = default_config_json();
  validate_against(j, def, "");
  const nlohmann::json full = merge_defaults(j, def);
  ExperimentConfig cfg;
  cfg.seed = full.at("seed").get<std::uint64_t>();
  cfg.target_fraction = full.at("target_fraction").get<double>();
  if (!(cfg.target_fraction > 0.0 && cfg.target_fraction <= 1.0))
    throw ConfigError("target_fraction must be in (0, 1]");
  cfg.data = data_from_json(full.at("data"));
  cfg.model = model::config_from_json(full.at("model"));
  cfg.stage1 = stage1_from_json(full.at("stage1"));
  cfg.stage2 = stage2_from_json(full.at("stage2"));
  if (cfg.stage1.epochs < 0 || cfg.stage2.epochs < 0)
    throw ConfigError("epochs must be >= 0");
  if (cfg.stage1.batch_size < 1 || cfg.stage2.batch_size < 1)
    throw ConfigError("batch_size must be >= 1");
  if (cfg.data.vocab_size + 1 != cfg.model.vocab_size)
    throw ConfigError("model.vocab_size must be data.vocab_size + 1 (blank)");
  if (cfg.data.channels != cfg.model.input_channels)
    throw ConfigError("model.input_channels must match data.channels");
  return cfg;
}

nlohmann::json load_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config parse error in " + path.string() + ": " + e.what());
  }
  return j;
}

void apply_override(nlohmann::json* cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must look like key.path=value: " + assignment);
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);

  // Walk the defaults to validate the path and find the expected type.
  const nlohmann::json def = default_config_json();
  const nlohmann::json* dnode = &def;
  std::vector<std::string> keys;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    keys.push_back(path.substr(start, dot == std::string::npos ? dot : dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  for (const auto& k : keys) {
    if (!dnode->is_object() || !dnode->contains(k))
      throw ConfigError("unknown config key: " + path);
    dnode = &dnode->at(k);
  }
  if (dnode->is_object())
    throw ConfigError("config key " + path + " is a section, not a value");

  nlohmann::json value;
  if (dnode->is_string()) {
    value = raw;
  } else {
    value = nlohmann::json::parse(raw, nullptr, false);
    if (value.is_discarded() || !types_compatible(value, *dnode))
      throw ConfigError("config key " + path + " expects " + type_name(*dnode) +
                        ", got '" + raw + "'");
  }

  nlohmann::json* node = cfg;
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    if (!node->contains(keys[i]) || !(*node)[keys[i]].is_object())
      (*node)[keys[i]] = nlohmann::json::object();
    node = &(*node)[keys[i]];
  }
  (*node)[keys.back()] = value;
}

}  // namespace msda::pipeline
