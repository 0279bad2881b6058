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

#include <cstdint>
#include <vector>

#include "trig/model.hpp"

namespace trig {

/// Per-block, per-head attention instrumentation: raw pre-softmax scores
/// (before masking, i.e. what the score skip forwards) and post-softmax
/// weights. Snapshot values, not tape nodes.
struct AttentionRecord {
  std::vector<std::vector<Tensor>> scores;   // [block][head], (T x T)
  std::vector<std::vector<Tensor>> weights;  // [block][head], (T x T)
};

/// Visibility matrix for the window mask: row 0 (the initial-embedding token)
/// sees everything; feature row i sees feature column j iff |i-j| <= radius,
/// and column 0 iff sees_init. 1 = visible.
std::vector<uint8_t> build_window_mask(long tokens, long radius, bool sees_init);

struct EncodeOptions {
  /// Replace the forwarded score skip with zeros each block (equivalence
  /// probe against skip_attention = false).
  bool force_zero_skip = false;
};

struct EncodeResult {
  int tokens = -1;    // tape node, (N+1) x D  = [f_init; f_1..f_N]
  int f_init = -1;    // 1 x D slice
  int features = -1;  // N x D slice
  AttentionRecord record;
};

/// One pre-LN encoder block. p_prev holds per-head score nodes from the
/// previous block (empty for block 1 or with the skip disabled); p_next
/// receives this block's raw scores for the next one.
int encoder_block(Tape& tape, Vars& vars, const ModelConfig& cfg, long block_index, int x,
                  const std::vector<int>& p_prev, std::vector<int>* p_next,
                  const std::vector<uint8_t>& mask, AttentionRecord* record);

/// Patch split -> embeddings -> L blocks. image is a {3, rect_h, rect_w}
/// tape node.
EncodeResult encode(Tape& tape, Vars& vars, const ModelConfig& cfg, int rectified_image,
                    const EncodeOptions& opts = {});

}  // namespace trig
