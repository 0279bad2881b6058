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

#include "trig/pipeline.hpp"

namespace trig {

EncoderOut run_encoder(const ParamStore& params, const PipelineContext& ctx, const Tensor& image) {
  Tape tape(/*track_grad=*/false);
  Vars vars(tape, params);
  int img = tape.constant(image);
  int rect = rectify(tape, vars, ctx.cfg, ctx.rect, img);
  EncodeResult enc = encode(tape, vars, ctx.cfg, rect);
  EncoderOut out;
  out.rectified = tape.val(rect);
  out.f_init = tape.val(enc.f_init);
  out.features = tape.val(enc.features);
  out.record = std::move(enc.record);
  return out;
}

int sample_loss(Tape& tape, Vars& vars, const PipelineContext& ctx, const Tensor& image,
                const std::vector<int>& target) {
  int img = tape.constant(image);
  int rect = rectify(tape, vars, ctx.cfg, ctx.rect, img);
  EncodeResult enc = encode(tape, vars, ctx.cfg, rect);
  std::vector<StepNodes> steps =
      teacher_forced_steps(tape, vars, ctx.cfg, enc.f_init, enc.features, target);
  std::vector<int> prob_nodes;
  std::vector<int> picks;
  for (size_t t = 0; t < steps.size(); ++t) {
    prob_nodes.push_back(steps[t].probs);
    picks.push_back(target[t]);
  }
  int stacked = tape.concat_rows(prob_nodes);
  return tape.neg_log_pick(stacked, picks);
}

}  // namespace trig
