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
#include "trig/tfe.hpp"

using namespace trig;
using test::random_tensor;
using testref::RefEncode;
using testref::ref_encode;

namespace {

ParamStore noisy_params(const ModelConfig& cfg, uint64_t seed) {
  ParamStore p = init_params(cfg, seed);
  Rng rng(seed ^ 0xabcdef);
  for (auto& name : p.names)
    for (double& v : p.at(name).data) v += rng.normal(0.0, 0.3);
  return p;
}

Tensor encode_tokens(const ModelConfig& cfg, const ParamStore& params, const Tensor& img,
                     EncodeOptions opts = {}, AttentionRecord* rec = nullptr) {
  Tape tape(false);
  Vars vars(tape, params);
  EncodeResult r = encode(tape, vars, cfg, tape.constant(img), opts);
  if (rec) *rec = r.record;
  return tape.val(r.tokens);
}

ModelConfig six_token_config() {
  ModelConfig cfg = preset_config("tiny");
  cfg.rect_w = 10;  // 5 patches of 8x2 -> 6 tokens with the initial embedding
  return cfg;
}

}  // namespace

TEST_CASE("split geometry: strip and square patchings give 26 and 201 tokens") {
  CHECK(preset_config("paper-1d").num_tokens() == 26);
  CHECK(preset_config("paper-2d").num_tokens() == 201);
  ModelConfig one = preset_config("tiny");
  one.patch_w = one.rect_w;
  CHECK(one.num_patches() == 1);
  CHECK(one.num_tokens() == 2);
}

TEST_CASE("encoder matches the straight-line reference, records included") {
  ModelConfig cfg = preset_config("tiny");
  cfg.rect_w = 10;
  for (bool skip : {true, false}) {
    cfg.skip_attention = skip;
    ParamStore params = noisy_params(cfg, 17);
    Rng rng(2);
    Tensor img = random_tensor({3, cfg.rect_h, cfg.rect_w}, rng, 0.0, 1.0);
    AttentionRecord rec;
    Tensor got = encode_tokens(cfg, params, img, {}, &rec);
    RefEncode want = ref_encode(cfg, params, img);
    CHECK(max_abs_diff(got, want.tokens) < 1e-9);
    REQUIRE(rec.scores.size() == static_cast<size_t>(cfg.depth));
    for (long l = 0; l < cfg.depth; ++l)
      for (long h = 0; h < cfg.heads; ++h) {
        CHECK(max_abs_diff(rec.scores[l][h], want.raw[l][h]) < 1e-9);
        CHECK(max_abs_diff(rec.weights[l][h], want.att[l][h]) < 1e-9);
      }
  }
}

TEST_CASE("residual score skip: raw(l) = fresh(l) + raw(l-1)") {
  ModelConfig cfg = six_token_config();
  cfg.depth = 3;
  ParamStore params = noisy_params(cfg, 23);
  Rng rng(9);
  Tensor img = random_tensor({3, cfg.rect_h, cfg.rect_w}, rng, 0.0, 1.0);
  AttentionRecord rec;
  (void)encode_tokens(cfg, params, img, {}, &rec);
  RefEncode ref = ref_encode(cfg, params, img);
  for (long l = 1; l < cfg.depth; ++l)
    for (long h = 0; h < cfg.heads; ++h) {
      Tensor want = ref.fresh[l][h];
      for (long i = 0; i < want.size(); ++i) want.data[i] += rec.scores[l - 1][h].data[i];
      CHECK(max_abs_diff(rec.scores[l][h], want) < 1e-6);
    }
}

TEST_CASE("forced-zero skip is bitwise identical to a skipless encoder") {
  ModelConfig cfg = six_token_config();
  ParamStore params = noisy_params(cfg, 31);
  Rng rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor img = random_tensor({3, cfg.rect_h, cfg.rect_w}, rng, 0.0, 1.0);
    cfg.skip_attention = true;
    Tensor with_probe = encode_tokens(cfg, params, img, {.force_zero_skip = true});
    cfg.skip_attention = false;
    Tensor without = encode_tokens(cfg, params, img);
    CHECK(bitwise_equal(with_probe, without));
  }
}

TEST_CASE("window mask shape: row 0 sees all, features see a band plus column 0") {
  auto m = build_window_mask(6, 1, true);
  for (long j = 0; j < 6; ++j) CHECK(m[j] == 1);
  CHECK(m[2 * 6 + 0] == 1);   // init column visible
  CHECK(m[2 * 6 + 1] == 1);   // |2-1| <= 1
  CHECK(m[2 * 6 + 4] == 0);   // |2-4| > 1
  auto blind = build_window_mask(6, 0, false);
  CHECK(blind[3 * 6 + 0] == 0);
  CHECK(blind[3 * 6 + 3] == 1);
}

TEST_CASE("mask locality: token j influences row i iff the window allows it") {
  ModelConfig cfg = six_token_config();
  cfg.window_mask = true;
  long T = cfg.num_tokens();
  REQUIRE(T == 6);
  ParamStore params = noisy_params(cfg, 41);
  Rng rng(3);
  Tensor x0 = random_tensor({T, cfg.dim}, rng);

  auto block_out = [&](const Tensor& x, long radius) {
    cfg.mask_radius = radius;
    auto mask = build_window_mask(T, radius, cfg.mask_sees_init);
    Tape tape(false);
    Vars vars(tape, params);
    return tape.val(encoder_block(tape, vars, cfg, 0, tape.constant(x), {}, nullptr, mask, nullptr));
  };

  for (long radius : {0L, 1L, 2L}) {
    auto mask = build_window_mask(T, radius, true);
    Tensor base = block_out(x0, radius);
    for (long j = 0; j < T; ++j) {
      Tensor xp = x0;
      xp(j, 0) += 0.5;
      xp(j, cfg.dim - 1) -= 0.25;
      Tensor pert = block_out(xp, radius);
      for (long i = 0; i < T; ++i) {
        double d = 0;
        for (long c = 0; c < cfg.dim; ++c) d = std::max(d, std::fabs(pert(i, c) - base(i, c)));
        bool influences = i == j || mask[i * T + j] == 1;
        if (influences)
          CHECK(d > 1e-12);
        else
          CHECK(d == 0.0);
      }
    }
  }
}

TEST_CASE("radius >= N reproduces the unmasked encoder bit for bit") {
  ModelConfig cfg = six_token_config();
  ParamStore params = noisy_params(cfg, 55);
  Rng rng(19);
  Tensor img = random_tensor({3, cfg.rect_h, cfg.rect_w}, rng, 0.0, 1.0);
  cfg.window_mask = true;
  cfg.mask_radius = cfg.num_tokens();
  Tensor masked = encode_tokens(cfg, params, img);
  cfg.window_mask = false;
  Tensor open = encode_tokens(cfg, params, img);
  CHECK(bitwise_equal(masked, open));
}

TEST_CASE("every attention row is a distribution") {
  ModelConfig cfg = six_token_config();
  cfg.window_mask = true;
  cfg.mask_radius = 1;
  ParamStore params = noisy_params(cfg, 61);
  Rng rng(29);
  Tensor img = random_tensor({3, cfg.rect_h, cfg.rect_w}, rng, 0.0, 1.0);
  AttentionRecord rec;
  (void)encode_tokens(cfg, params, img, {}, &rec);
  for (auto& heads : rec.weights)
    for (auto& w : heads)
      for (long i = 0; i < w.rows(); ++i) {
        double s = 0;
        for (long j = 0; j < w.cols(); ++j) s += w(i, j);
        CHECK(std::fabs(s - 1.0) < 1e-6);
      }
}
