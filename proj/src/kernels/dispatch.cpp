// kernels/dispatch.cpp

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

#include <atomic>
#include <cstdlib>

#include "msda/kernels/kernels.hpp"

namespace msda::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Ops* pick_auto() {
  if (const Ops* v = avx2_ops(); v && cpu_has_avx2()) return v;
  return &scalar_ops();
}

const Ops* pick_initial() {
  if (const char* env = std::getenv("MSDA_KERNELS")) {
    std::string_view name(env);
    if (name == "scalar") return &scalar_ops();
    if (name == "avx2") {
      if (const Ops* v = avx2_ops(); v && cpu_has_avx2()) return v;
    }
  }
  return pick_auto();
}

std::atomic<const Ops*>& active_slot() {
  static std::atomic<const Ops*> slot{pick_initial()};
  return slot;
}

}  // namespace

const Ops& active() { return *active_slot().load(std::memory_order_acquire); }

bool set_active(std::string_view name) {
  const Ops* next = nullptr;
  if (name == "scalar") {
    next = &scalar_ops();
  } else if (name == "avx2") {
    if (const Ops* v = avx2_ops(); v && cpu_has_avx2()) next = v;
  } else if (name == "auto") {
    next = pick_auto();
  }
  if (!next) return false;
  active_slot().store(next, std::memory_order_release);
  return true;
}

}  // namespace msda::kernels
