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

#include "trig/decoder.hpp"
#include "trig/rectifier.hpp"
#include "trig/tfe.hpp"

namespace trig {

/// Everything that is fixed per configuration (TPS basis etc.).
struct PipelineContext {
  ModelConfig cfg;
  RectifierContext rect;

  static PipelineContext build(ModelConfig cfg) {
    cfg.validate();
    RectifierContext r = RectifierContext::build(cfg);
    return PipelineContext{std::move(cfg), std::move(r)};
  }
};

/// Encoder-side forward on a fresh no-grad tape; used by inference paths.
struct EncoderOut {
  Tensor rectified;  // {3, rect_h, rect_w}
  Tensor f_init;     // 1 x D
  Tensor features;   // N x D
  AttentionRecord record;
};

EncoderOut run_encoder(const ParamStore& params, const PipelineContext& ctx, const Tensor& image);

/// Teacher-forced cross-entropy of one sample on the caller's tape:
/// TRA -> TFE -> AD -> sum of -log p(y_t) through eos. Returns the scalar
/// loss node.
int sample_loss(Tape& tape, Vars& vars, const PipelineContext& ctx, const Tensor& image,
                const std::vector<int>& target);

}  // namespace trig
