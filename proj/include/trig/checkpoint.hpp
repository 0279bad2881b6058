// Copyright 2026 The TRIG Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "trig/model.hpp"

namespace trig {

/// On-disk layout (all little-endian):
///   "TRIG" | u32 version | u64 json_size | JSON header | raw f64 payloads
/// The JSON header holds the model config, counters, RNG state and the
/// tensor directory (name, dtype, shape, byte offset into the payload
/// section). save -> load -> save is byte-identical.
struct Checkpoint {
  uint32_t version = 1;
  ModelConfig cfg;
  ParamStore params;
  ParamStore opt_state;  // adadelta accumulators; empty before training
  std::array<uint64_t, 4> rng_state{};
  long epoch = 0;
  long step = 0;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// Sum of tensor-directory element counts for the model parameters (the
/// "two views of one model" cross-check against count_params).
long checkpoint_param_total(const std::string& path);

}  // namespace trig
