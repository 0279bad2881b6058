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

#include "trig/tfe.hpp"

#include <cmath>

#include "trig/error.hpp"

namespace trig {

std::vector<uint8_t> build_window_mask(long tokens, long radius, bool sees_init) {
  std::vector<uint8_t> mask(static_cast<size_t>(tokens) * tokens, 0);
  for (long j = 0; j < tokens; ++j) mask[j] = 1;  // row 0 sees all
  for (long i = 1; i < tokens; ++i) {
    if (sees_init) mask[i * tokens] = 1;
    for (long j = 1; j < tokens; ++j)
      if (std::abs(i - j) <= radius) mask[i * tokens + j] = 1;
  }
  return mask;
}

int encoder_block(Tape& tape, Vars& vars, const ModelConfig& cfg, long block_index, int x,
                  const std::vector<int>& p_prev, std::vector<int>* p_next,
                  const std::vector<uint8_t>& mask, AttentionRecord* record) {
  long T = tape.val(x).rows();
  long D = cfg.dim;
  long dk = D / cfg.heads;
  std::string b = "tfe.block" + std::to_string(block_index) + ".";

  int normed = tape.layer_norm_rows(x, vars.p(b + "ln1.gain"), vars.p(b + "ln1.bias"));
  int q = tape.add_row_broadcast(tape.matmul(normed, vars.p(b + "attn.wq")), vars.p(b + "attn.bq"));
  int k = tape.add_row_broadcast(tape.matmul(normed, vars.p(b + "attn.wk")), vars.p(b + "attn.bk"));
  int v = tape.add_row_broadcast(tape.matmul(normed, vars.p(b + "attn.wv")), vars.p(b + "attn.bv"));

  if (record) {
    record->scores.emplace_back();
    record->weights.emplace_back();
  }
  if (p_next) p_next->clear();

  std::vector<int> head_outs;
  for (long h = 0; h < cfg.heads; ++h) {
    int qh = tape.slice_cols(q, h * dk, (h + 1) * dk);
    int kh = tape.slice_cols(k, h * dk, (h + 1) * dk);
    int vh = tape.slice_cols(v, h * dk, (h + 1) * dk);
    int fresh = tape.scale(tape.matmul(qh, tape.transpose(kh)), 1.0 / std::sqrt((double)dk));
    // raw scores carry the previous block's raw scores (RealFormer skip);
    // the mask never enters the forwarded value
    int raw = p_prev.empty() ? fresh : tape.add(fresh, p_prev[h]);
    if (p_next) p_next->push_back(raw);
    int att = tape.softmax_rows(raw, mask);
    if (record) {
      record->scores.back().push_back(tape.val(raw));
      record->weights.back().push_back(tape.val(att));
    }
    head_outs.push_back(tape.matmul(att, vh));
  }
  int merged = head_outs[0];
  for (size_t h = 1; h < head_outs.size(); ++h) merged = tape.concat_cols(merged, head_outs[h]);
  int msa =
      tape.add_row_broadcast(tape.matmul(merged, vars.p(b + "attn.wo")), vars.p(b + "attn.bo"));
  int x1 = tape.add(msa, x);

  int normed2 = tape.layer_norm_rows(x1, vars.p(b + "ln2.gain"), vars.p(b + "ln2.bias"));
  int h1 = tape.add_row_broadcast(tape.matmul(normed2, vars.p(b + "mlp.w1")), vars.p(b + "mlp.b1"));
  int act = tape.gelu_op(h1);
  int h2 = tape.add_row_broadcast(tape.matmul(act, vars.p(b + "mlp.w2")), vars.p(b + "mlp.b2"));
  (void)T;
  return tape.add(h2, x1);
}

EncodeResult encode(Tape& tape, Vars& vars, const ModelConfig& cfg, int rectified_image,
                    const EncodeOptions& opts) {
  const Tensor& img = tape.val(rectified_image);
  if (img.shape.size() != 3 || img.shape[1] != cfg.rect_h || img.shape[2] != cfg.rect_w)
    throw DataError("encode: rectified image does not match config geometry");
  long N = cfg.num_patches();
  long T = N + 1;

  int patches = tape.patchify(rectified_image, cfg.patch_h, cfg.patch_w);
  int embedded = tape.matmul(patches, vars.p("tfe.patch_embed.w"));  // E = X_s W_E, no bias
  int f0 = tape.concat_rows({vars.p("tfe.init"), embedded});
  f0 = tape.add(f0, vars.p("tfe.pos"));

  std::vector<uint8_t> mask;
  if (cfg.window_mask) mask = build_window_mask(T, cfg.mask_radius, cfg.mask_sees_init);

  EncodeResult out;
  int x = f0;
  std::vector<int> p_prev, p_next;
  for (long l = 0; l < cfg.depth; ++l) {
    if (cfg.skip_attention && (l == 0 || opts.force_zero_skip)) {
      // base case P = 0 (and the forced-zero probe): materialize actual
      // zero score tensors so the arithmetic path matches later blocks
      p_prev.clear();
      for (long h = 0; h < cfg.heads; ++h) p_prev.push_back(tape.constant(Tensor({T, T})));
    } else if (!cfg.skip_attention) {
      p_prev.clear();
    }
    x = encoder_block(tape, vars, cfg, l, x, p_prev,
                      cfg.skip_attention ? &p_next : nullptr, mask, &out.record);
    p_prev = p_next;
  }
  out.tokens = x;
  out.f_init = tape.slice_rows(x, 0, 1);
  out.features = tape.slice_rows(x, 1, T);
  return out;
}

}  // namespace trig
