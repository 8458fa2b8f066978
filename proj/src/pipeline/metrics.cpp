// pipeline/metrics.cpp

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

#include "msda/pipeline/metrics.hpp"

#include "msda/error.hpp"

namespace msda::pipeline {

MetricsWriter::MetricsWriter(const std::filesystem::path& path,
                             nlohmann::json header) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  os_.open(path, std::ios::binary | std::ios::trunc);
  if (!os_) throw DataError("cannot open metrics file " + path.string());
  header["type"] = "run_header";
  write(header);
}

void MetricsWriter::write(const nlohmann::json& record) {
  if (!os_.is_open()) return;
  os_ << record.dump() << '\n';
  if (!os_) throw DataError("metrics write failed");
  os_.flush();
}

}  // namespace msda::pipeline
