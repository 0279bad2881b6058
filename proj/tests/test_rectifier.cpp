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

#include <cmath>

#include <doctest.h>

#include "ref_oracles.hpp"
#include "test_util.hpp"
#include "trig/error.hpp"
#include "trig/rectifier.hpp"

using namespace trig;
using test::random_tensor;
using testref::DenseTps;

namespace {

Tensor grid_from_points(const ModelConfig& cfg, const RectifierContext& ctx,
                        const Tensor& points) {
  Tape tape(false);
  int g = tps_grid(tape, ctx, tape.constant(points));
  (void)cfg;
  return tape.val(g);
}

}  // namespace

TEST_CASE("canonical points sit on the inset top and bottom edges") {
  Tensor p = canonical_points(6);
  CHECK(p.rows() == 6);
  for (long j = 0; j < 3; ++j) {
    CHECK(p(j, 1) == doctest::Approx(-0.95));
    CHECK(p(3 + j, 1) == doctest::Approx(0.95));
    CHECK(p(j, 0) == p(3 + j, 0));
  }
  CHECK(p(0, 0) == doctest::Approx(-0.95));
  CHECK(p(2, 0) == doctest::Approx(0.95));
  CHECK_THROWS_AS((void)canonical_points(5), DataError);
}

TEST_CASE("TPS with canonical targets is the identity grid") {
  ModelConfig cfg = preset_config("tiny");
  RectifierContext ctx = RectifierContext::build(cfg);
  CHECK_FALSE(ctx.basis.regularized);
  Tensor grid = grid_from_points(cfg, ctx, ctx.canonical);
  CHECK(max_abs_diff(grid, identity_grid(cfg.rect_h, cfg.rect_w)) < 1e-6);
}

TEST_CASE("TPS is equivariant to translating the control points") {
  ModelConfig cfg = preset_config("tiny");
  RectifierContext ctx = RectifierContext::build(cfg);
  Tensor pts = ctx.canonical;
  for (long k = 0; k < pts.rows(); ++k) {
    pts(k, 0) += 0.07;
    pts(k, 1) -= 0.12;
  }
  Tensor grid = grid_from_points(cfg, ctx, pts);
  Tensor want = identity_grid(cfg.rect_h, cfg.rect_w);
  for (long o = 0; o < want.rows(); ++o) {
    want(o, 0) += 0.07;
    want(o, 1) -= 0.12;
  }
  CHECK(max_abs_diff(grid, want) < 1e-6);
}

TEST_CASE("TPS grid matches the dense oracle on curved control points") {
  ModelConfig cfg = preset_config("toy");
  cfg.num_ctrl = 8;
  RectifierContext ctx = RectifierContext::build(cfg);
  Tensor pts = ctx.canonical;
  // bend the points into an arc with a mild horizontal squeeze
  for (long k = 0; k < pts.rows(); ++k) {
    pts(k, 0) *= 0.9;
    pts(k, 1) += 0.25 * std::cos(1.3 * pts(k, 0)) - 0.15;
  }
  Tensor grid = grid_from_points(cfg, ctx, pts);
  DenseTps oracle(ctx.canonical, pts);
  Tensor id = identity_grid(cfg.rect_h, cfg.rect_w);
  double worst = 0.0;
  for (long o = 0; o < id.rows(); ++o) {
    auto [x, y] = oracle.warp(id(o, 0), id(o, 1));
    worst = std::max({worst, std::fabs(grid(o, 0) - x), std::fabs(grid(o, 1) - y)});
  }
  CHECK(worst < 1e-6);
  // and the warp interpolates: canonical -> predicted exactly
  for (long k = 0; k < pts.rows(); ++k) {
    auto [x, y] = oracle.warp(ctx.canonical(k, 0), ctx.canonical(k, 1));
    CHECK(x == doctest::Approx(pts(k, 0)).epsilon(1e-9));
    CHECK(y == doctest::Approx(pts(k, 1)).epsilon(1e-9));
  }
}

TEST_CASE("localization net starts at the canonical points (identity warp)") {
  ModelConfig cfg = preset_config("tiny");
  ParamStore params = init_params(cfg, 11);
  RectifierContext ctx = RectifierContext::build(cfg);
  Rng rng(4);
  Tensor img = random_tensor({3, cfg.canvas_h, cfg.canvas_w}, rng, 0.0, 1.0);
  Tape tape(false);
  Vars vars(tape, params);
  int pts = localize(tape, vars, cfg, tape.constant(img));
  CHECK(max_abs_diff(tape.val(pts), ctx.canonical) < 1e-9);

  // hence rectify == plain resize at init
  Tensor ctrl;
  int rect = rectify(tape, vars, cfg, ctx, tape.constant(img), &ctrl);
  cfg.use_tps = false;
  ModelConfig plain = cfg;
  Tape tape2(false);
  Vars vars2(tape2, params);
  int resized = rectify(tape2, vars2, plain, ctx, tape2.constant(img));
  CHECK(max_abs_diff(tape.val(rect), tape2.val(resized)) < 1e-6);
  CHECK(max_abs_diff(ctrl, ctx.canonical) < 1e-9);
}

TEST_CASE("resize-only rectification with matching sizes is the identity") {
  ModelConfig cfg = preset_config("tiny");
  cfg.use_tps = false;
  cfg.canvas_h = cfg.rect_h;
  cfg.canvas_w = cfg.rect_w;
  RectifierContext ctx = RectifierContext::build(cfg);
  Rng rng(6);
  Tensor img = random_tensor({3, cfg.rect_h, cfg.rect_w}, rng, 0.0, 1.0);
  Tape tape(false);
  Vars vars(tape, ParamStore{});
  int rect = rectify(tape, vars, cfg, ctx, tape.constant(img));
  CHECK(max_abs_diff(tape.val(rect), img) < 1e-12);
}

TEST_CASE("rectification pathway is differentiable end to end") {
  ModelConfig cfg = preset_config("tiny");
  ParamStore params = init_params(cfg, 3);
  Rng noise(8);
  for (auto& name : params.names)
    for (double& v : params.at(name).data) v += noise.normal(0.0, 0.02);
  RectifierContext ctx = RectifierContext::build(cfg);
  Rng rng(5);
  Tensor img = random_tensor({3, cfg.canvas_h, cfg.canvas_w}, rng, 0.1, 0.9);

  auto loss_at = [&]() {
    Tape tape(false);
    Vars vars(tape, params);
    int r = rectify(tape, vars, cfg, ctx, tape.constant(img));
    Tape* t = &tape;
    int s = t->sum_all(t->mul(r, r));
    return tape.val(s).data[0];
  };
  ParamStore grads;
  for (auto& name : params.names) {
    grads.names.push_back(name);
    grads.tensors.emplace(name, Tensor::zeros(params.at(name).shape));
  }
  {
    Tape tape(true);
    Vars vars(tape, params);
    int r = rectify(tape, vars, cfg, ctx, tape.constant(img));
    tape.backward(tape.sum_all(tape.mul(r, r)));
    vars.accumulate_grads(grads);
  }
  // spot-check a handful of parameters against central differences
  Rng pick(77);
  double h = 1e-5, worst = 0.0;
  for (const char* name : {"tra.conv0.w", "tra.fc2.w", "tra.fc2.b", "tra.norm2.gain"}) {
    Tensor& p = params.at(name);
    for (int probe = 0; probe < 5; ++probe) {
      long i = pick.uniform_int(p.size());
      double saved = p.data[i];
      p.data[i] = saved + h;
      double up = loss_at();
      p.data[i] = saved - h;
      double down = loss_at();
      p.data[i] = saved;
      double num = (up - down) / (2 * h);
      double ana = grads.at(name).data[i];
      worst = std::max(worst, std::fabs(ana - num) / std::max({std::fabs(ana), std::fabs(num), 1e-6}));
    }
  }
  CHECK(worst < 1e-4);
}
