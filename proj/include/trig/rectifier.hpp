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

#include "trig/model.hpp"
#include "trig/tps.hpp"

namespace trig {

/// Per-config precomputation for the transformation stage. The TPS basis
/// depends only on the canonical points and output size, so it is built once.
struct RectifierContext {
  Tensor canonical;     // {K, 2}
  TpsBasis basis;
  Tensor resize_grid;   // identity grid used when TPS is disabled

  static RectifierContext build(const ModelConfig& cfg);
};

/// Shallow CNN -> 2K control points in [-1,1], shape {K, 2} on the tape.
/// Four conv(3x3)/norm/relu/pool blocks, global average pool, two FC layers
/// and tanh. At initialization the output equals the canonical points.
int localize(Tape& tape, Vars& vars, const ModelConfig& cfg, int image);

/// TPS sampling grid from predicted control points (linear in the points).
int tps_grid(Tape& tape, const RectifierContext& ctx, int points);

/// Full transformation stage: {3, canvas_h, canvas_w} -> {3, rect_h, rect_w}.
/// With use_tps off this is a plain bilinear resize. Optionally reports the
/// predicted control points.
int rectify(Tape& tape, Vars& vars, const ModelConfig& cfg, const RectifierContext& ctx,
            int image, Tensor* ctrl_out = nullptr);

}  // namespace trig
