// msda/pipeline/metrics.hpp

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
#include <fstream>

#include "json.hpp"

namespace msda::pipeline {

// One JSON object per line. Records carry no timestamps or other
// run-environment state, so identical runs produce identical bytes.
class MetricsWriter {
 public:
  MetricsWriter() = default;  // disabled sink
  MetricsWriter(const std::filesystem::path& path, nlohmann::json header);

  void write(const nlohmann::json& record);
  bool enabled() const { return os_.is_open(); }

 private:
  std::ofstream os_;
};

}  // namespace msda::pipeline
