// msda/pipeline/config.hpp

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
#include <string>
#include <vector>

#include "json.hpp"
#include "msda/data/data.hpp"
#include "msda/model/model.hpp"
#include "msda/pipeline/trainer.hpp"

namespace msda::pipeline {

// Everything a run needs except the method, which is a command-line choice.
// Objective selection fields inside the stage configs (mode, teacher, student)
// are derived from the method, not read from config files.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  double target_fraction = 1.0;  // fraction of unlabeled target training data
  data::SynthConfig data;
  model::ModelConfig model;
  Stage1Config stage1;
  Stage2Config stage2;
};

// Complete default configuration as JSON; the schema for validation.
nlohmann::json default_config_json();

nlohmann::json config_to_json(const ExperimentConfig& cfg);

// Strict parse: every key must exist in the defaults with a matching type;
// missing keys keep their defaults. Throws ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);

// Reads a JSON config file. Throws DataError on IO and ConfigError on parse.
nlohmann::json load_config_file(const std::filesystem::path& path);

// Applies one "dotted.path=value" override in place, validating the path and
// value type against the defaults. Throws ConfigError.
void apply_override(nlohmann::json* cfg, const std::string& assignment);

}  // namespace msda::pipeline
