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

#include "trig/rectifier.hpp"

#include "trig/error.hpp"

namespace trig {

RectifierContext RectifierContext::build(const ModelConfig& cfg) {
  RectifierContext ctx;
  ctx.resize_grid = identity_grid(cfg.rect_h, cfg.rect_w);
  if (cfg.use_tps) {
    ctx.canonical = canonical_points(cfg.num_ctrl);
    ctx.basis = build_tps_basis(ctx.canonical, cfg.rect_h, cfg.rect_w);
  }
  return ctx;
}

int localize(Tape& tape, Vars& vars, const ModelConfig& cfg, int image) {
  const Tensor& img = tape.val(image);
  if (img.shape.size() != 3 || img.shape[0] != 3 || img.shape[1] != cfg.canvas_h ||
      img.shape[2] != cfg.canvas_w)
    throw DataError("localize: image dimensions do not match config");
  int x = image;
  for (int i = 0; i < 4; ++i) {
    std::string b = std::to_string(i);
    x = tape.conv2d_3x3(x, vars.p("tra.conv" + b + ".w"), vars.p("tra.conv" + b + ".b"));
    x = tape.instance_norm(x, vars.p("tra.norm" + b + ".gain"), vars.p("tra.norm" + b + ".bias"));
    x = tape.relu_op(x);
    x = tape.maxpool2x2(x);
  }
  x = tape.global_avg_pool(x);  // {1, C4}
  x = tape.add_row_broadcast(tape.matmul(x, vars.p("tra.fc1.w")), vars.p("tra.fc1.b"));
  x = tape.relu_op(x);
  x = tape.add_row_broadcast(tape.matmul(x, vars.p("tra.fc2.w")), vars.p("tra.fc2.b"));
  x = tape.tanh_op(x);  // coordinates squashed into (-1,1)
  return tape.reshape(x, {cfg.num_ctrl, 2});
}

int tps_grid(Tape& tape, const RectifierContext& ctx, int points) {
  long K = ctx.canonical.rows();
  if (tape.val(points).rows() != K) throw NumericError("tps_grid: control point count mismatch");
  int padded = tape.concat_rows({points, tape.constant(Tensor({3, 2}))});
  int coeff = tape.matmul(tape.constant(ctx.basis.delta_inv), padded);
  return tape.matmul(tape.constant(ctx.basis.phat), coeff);
}

int rectify(Tape& tape, Vars& vars, const ModelConfig& cfg, const RectifierContext& ctx,
            int image, Tensor* ctrl_out) {
  if (!cfg.use_tps) {
    int grid = tape.constant(ctx.resize_grid);
    return tape.grid_sample(image, grid, cfg.rect_h, cfg.rect_w);
  }
  int points = localize(tape, vars, cfg, image);
  if (ctrl_out) *ctrl_out = tape.val(points);
  int grid = tps_grid(tape, ctx, points);
  return tape.grid_sample(image, grid, cfg.rect_h, cfg.rect_w);
}

}  // namespace trig
