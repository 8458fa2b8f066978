// msda/model/checkpoint.hpp

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

#include <filesystem>
#include <map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "msda/autodiff/tensor.hpp"
#include "msda/model/model.hpp"

namespace msda::model {

// On-disk container: "MSDC" magic, u32 format version, u64 JSON manifest
// length, the manifest (tensor names/shapes/offsets plus free-form extras),
// then raw little-endian f64 blobs.
struct BlobFile {
  std::map<std::string, std::pair<autodiff::Shape, std::vector<double>>> tensors;
  nlohmann::json extras;
};

void save_blob_file(const std::filesystem::path& path, const BlobFile& blob);
BlobFile load_blob_file(const std::filesystem::path& path);

nlohmann::json config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const nlohmann::json& j);

// Model checkpoint: parameters plus the config (stored in extras under
// "model_config") and whatever else the caller adds.
void save_model(const std::filesystem::path& path, const Params& params,
                nlohmann::json extras = nlohmann::json::object());
Params load_model(const std::filesystem::path& path,
                  nlohmann::json* extras_out = nullptr);

}  // namespace msda::model
