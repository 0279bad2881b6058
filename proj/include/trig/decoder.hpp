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

#include <functional>
#include <string>
#include <vector>

#include "trig/model.hpp"

namespace trig {

/// Additive attention over the encoder features:
///   e_i = w^T tanh(W_d s_prev + V_d f_i + b),  alpha = softmax(e),
///   g = sum_i alpha_i f_i.
/// Returns (alpha node 1xN, glimpse node 1xD).
std::pair<int, int> attention_step(Tape& tape, Vars& vars, int s_prev, int features);

struct StepNodes {
  int alpha;  // 1 x N
  int glimpse;
  int state;  // 1 x D
  int probs;  // 1 x 97
};

/// One decoding step: attention glimpse, GRU fed concat(g_t, onehot(y_prev)),
/// output distribution over the charset. The first step feeds y_prev = pad.
StepNodes decode_step(Tape& tape, Vars& vars, const ModelConfig& cfg, int s_prev, int features,
                      int y_prev);

/// Initial hidden state: f_init with guidance enabled, zeros otherwise.
int initial_state(Tape& tape, const ModelConfig& cfg, int f_init);

/// Teacher forcing: runs through the eos position of `target` (ids from
/// charset::encode) feeding ground truth, and returns one prob node per step.
std::vector<StepNodes> teacher_forced_steps(Tape& tape, Vars& vars, const ModelConfig& cfg,
                                            int f_init, int features,
                                            const std::vector<int>& target);

struct DecodeResult {
  std::string text;
  std::vector<int> ids;            // emitted ids, eos excluded
  double log_prob = 0.0;
  std::vector<Tensor> alphas;      // per-step attention over features
  std::vector<Tensor> step_probs;  // per-step 97-way distributions
};

/// Greedy argmax decoding until eos or max_len.
DecodeResult greedy_decode(const ParamStore& params, const ModelConfig& cfg, const Tensor& f_init,
                           const Tensor& features, long max_len);

/// Generic beam search core over accumulated log-probabilities. step_fn maps
/// (opaque state index, y_prev) to per-class log-probs plus a new state
/// index; state 0 is the start state. Ties break by token-id lexicographic
/// order of the full sequence. Exposed so tests can drive it with hand-built
/// step tables.
struct BeamHypothesis {
  std::vector<int> ids;  // eos excluded
  double log_prob = 0.0;
};
BeamHypothesis beam_search(
    const std::function<std::vector<double>(int state, int y_prev, int* next_state)>& step_fn,
    int n_classes, int eos_id, int start_symbol, long max_len, long width);

/// Beam decoding of the real model (width 5 reproduces the reference
/// inference procedure; width 1 coincides with greedy).
DecodeResult beam_decode(const ParamStore& params, const ModelConfig& cfg, const Tensor& f_init,
                         const Tensor& features, long max_len, long width);

}  // namespace trig
