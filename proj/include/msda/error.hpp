// msda/error.hpp

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

#include <stdexcept>
#include <string>

namespace msda {

// Shape or rank mismatch in a tensor op. Message names the op and the
// offending shapes.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid numeric input (non-finite values, empty reductions, bad ranges).
class ValueError : public std::runtime_error {
 public:
  explicit ValueError(const std::string& msg) : std::runtime_error(msg) {}
};

// Label sequence cannot be aligned to the available output frames.
class AlignmentError : public std::runtime_error {
 public:
  explicit AlignmentError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad configuration: unknown key, wrong type, out-of-range value,
// or an override that contradicts the selected method.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Missing or malformed dataset files.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or incompatible checkpoint.
class CheckpointError : public std::runtime_error {
 public:
  explicit CheckpointError(const std::string& msg)
      : std::runtime_error(msg) {}
};

// Training aborted because the loss became non-finite and stayed so.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& msg)
      : std::runtime_error(msg) {}
};

}  // namespace msda
