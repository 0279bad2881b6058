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

#include "trig/decoder.hpp"

#include <algorithm>
#include <cmath>

#include "trig/charset.hpp"
#include "trig/error.hpp"

namespace trig {

std::pair<int, int> attention_step(Tape& tape, Vars& vars, int s_prev, int features) {
  if (tape.val(features).rows() < 1) throw NumericError("attention_step: no features");
  int u = tape.matmul(s_prev, vars.p("dec.attn.wd"));       // 1 x Da
  int vf = tape.matmul(features, vars.p("dec.attn.vd"));    // N x Da
  int pre = tape.add_row_broadcast(vf, u);
  pre = tape.add_row_broadcast(pre, vars.p("dec.attn.b"));
  int e = tape.transpose(tape.matmul(tape.tanh_op(pre), vars.p("dec.attn.w")));  // 1 x N
  int alpha = tape.softmax_rows(e);
  int glimpse = tape.matmul(alpha, features);  // 1 x D
  return {alpha, glimpse};
}

namespace {

Tensor onehot(int id) {
  Tensor t({1, Charset::kNumClasses});
  t.data[id] = 1.0;
  return t;
}

/// GRU cell, update-gate convention: s' = (1-z) * n + z * s.
int gru_cell(Tape& tape, Vars& vars, const ModelConfig& cfg, int s_prev, int input) {
  long D = cfg.dim;
  int gx = tape.add_row_broadcast(tape.matmul(input, vars.p("dec.gru.w")), vars.p("dec.gru.b_ih"));
  int gh = tape.add_row_broadcast(tape.matmul(s_prev, vars.p("dec.gru.u")), vars.p("dec.gru.b_hh"));
  int r = tape.sigmoid_op(tape.add(tape.slice_cols(gx, 0, D), tape.slice_cols(gh, 0, D)));
  int z = tape.sigmoid_op(tape.add(tape.slice_cols(gx, D, 2 * D), tape.slice_cols(gh, D, 2 * D)));
  int n = tape.tanh_op(
      tape.add(tape.slice_cols(gx, 2 * D, 3 * D), tape.mul(r, tape.slice_cols(gh, 2 * D, 3 * D))));
  int ones = tape.constant(Tensor::full({1, D}, 1.0));
  return tape.add(tape.mul(tape.sub(ones, z), n), tape.mul(z, s_prev));
}

}  // namespace

StepNodes decode_step(Tape& tape, Vars& vars, const ModelConfig& cfg, int s_prev, int features,
                      int y_prev) {
  auto [alpha, glimpse] = attention_step(tape, vars, s_prev, features);
  int input = tape.concat_cols(glimpse, tape.constant(onehot(y_prev)));
  int s = gru_cell(tape, vars, cfg, s_prev, input);
  // the GRU output vector is its new hidden state
  int logits =
      tape.add_row_broadcast(tape.matmul(s, vars.p("dec.out.w")), vars.p("dec.out.b"));
  int probs = tape.softmax_rows(logits);
  return {alpha, glimpse, s, probs};
}

int initial_state(Tape& tape, const ModelConfig& cfg, int f_init) {
  if (cfg.init_guidance) return f_init;
  return tape.constant(Tensor({1, cfg.dim}));
}

std::vector<StepNodes> teacher_forced_steps(Tape& tape, Vars& vars, const ModelConfig& cfg,
                                            int f_init, int features,
                                            const std::vector<int>& target) {
  long t_eff = static_cast<long>(target.size());
  for (size_t i = 0; i < target.size(); ++i)
    if (target[i] == charset().eos_id()) {
      t_eff = static_cast<long>(i) + 1;
      break;
    }
  std::vector<StepNodes> steps;
  int s = initial_state(tape, cfg, f_init);
  for (long t = 0; t < t_eff; ++t) {
    int y_prev = t == 0 ? charset().pad_id() : target[t - 1];
    StepNodes sn = decode_step(tape, vars, cfg, s, features, y_prev);
    s = sn.state;
    steps.push_back(sn);
  }
  return steps;
}

namespace {

struct InferenceStepper {
  const ParamStore& params;
  const ModelConfig& cfg;
  Tensor features;
  std::vector<Tensor> states;  // state 0 is s_0

  explicit InferenceStepper(const ParamStore& p, const ModelConfig& c, const Tensor& f_init,
                            const Tensor& feats)
      : params(p), cfg(c), features(feats) {
    if (cfg.init_guidance)
      states.push_back(f_init);
    else
      states.push_back(Tensor({1, cfg.dim}));
  }

  // returns (probs, alpha) and appends the new state
  std::pair<Tensor, Tensor> step(int state_index, int y_prev, int* next_state) {
    Tape tape(/*track_grad=*/false);
    Vars vars(tape, params);
    int s = tape.constant(states[state_index]);
    int f = tape.constant(features);
    StepNodes sn = decode_step(tape, vars, cfg, s, f, y_prev);
    states.push_back(tape.val(sn.state));
    *next_state = static_cast<int>(states.size()) - 1;
    return {tape.val(sn.probs), tape.val(sn.alpha)};
  }
};

}  // namespace

DecodeResult greedy_decode(const ParamStore& params, const ModelConfig& cfg, const Tensor& f_init,
                           const Tensor& features, long max_len) {
  if (max_len < 1) throw DataError("greedy_decode: max_len must be >= 1");
  InferenceStepper stepper(params, cfg, f_init, features);
  DecodeResult out;
  int state = 0;
  int y_prev = charset().pad_id();
  for (long t = 0; t < max_len; ++t) {
    auto [probs, alpha] = stepper.step(state, y_prev, &state);
    int best = 0;
    for (int c = 1; c < Charset::kNumClasses; ++c)
      if (probs.data[c] > probs.data[best]) best = c;
    out.log_prob += std::log(probs.data[best]);
    out.alphas.push_back(alpha);
    out.step_probs.push_back(probs);
    if (best == charset().eos_id()) break;
    out.ids.push_back(best);
    y_prev = best;
  }
  out.text = charset().decode(out.ids);
  return out;
}

BeamHypothesis beam_search(
    const std::function<std::vector<double>(int state, int y_prev, int* next_state)>& step_fn,
    int n_classes, int eos_id, int start_symbol, long max_len, long width) {
  if (width < 1) throw DataError("beam_search: width must be >= 1");
  struct Hyp {
    std::vector<int> ids;
    double log_prob = 0.0;
    int state = 0;
    bool finished = false;
    int y_prev;
  };
  auto better = [](const Hyp& a, const Hyp& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return a.ids < b.ids;  // deterministic tie-break
  };

  std::vector<Hyp> beam{Hyp{{}, 0.0, 0, false, start_symbol}};
  for (long t = 0; t < max_len; ++t) {
    std::vector<Hyp> candidates;
    bool any_open = false;
    for (const Hyp& h : beam) {
      if (h.finished) {
        candidates.push_back(h);  // finished hypotheses stay in the pool
        continue;
      }
      any_open = true;
      int next_state = 0;
      std::vector<double> lp = step_fn(h.state, h.y_prev, &next_state);
      for (int c = 0; c < n_classes; ++c) {
        Hyp nh = h;
        nh.log_prob += lp[c];
        nh.state = next_state;
        if (c == eos_id) {
          nh.finished = true;
        } else {
          nh.ids.push_back(c);
          nh.y_prev = c;
        }
        candidates.push_back(std::move(nh));
      }
    }
    if (!any_open) break;
    std::sort(candidates.begin(), candidates.end(), better);
    if (static_cast<long>(candidates.size()) > width) candidates.resize(width);
    beam = std::move(candidates);
  }
  std::sort(beam.begin(), beam.end(), better);
  return BeamHypothesis{beam.front().ids, beam.front().log_prob};
}

DecodeResult beam_decode(const ParamStore& params, const ModelConfig& cfg, const Tensor& f_init,
                         const Tensor& features, long max_len, long width) {
  InferenceStepper stepper(params, cfg, f_init, features);
  auto step_fn = [&](int state, int y_prev, int* next_state) {
    auto [probs, alpha] = stepper.step(state, y_prev, next_state);
    std::vector<double> lp(Charset::kNumClasses);
    for (int c = 0; c < Charset::kNumClasses; ++c) lp[c] = std::log(probs.data[c]);
    return lp;
  };
  BeamHypothesis best = beam_search(step_fn, Charset::kNumClasses, charset().eos_id(),
                                    charset().pad_id(), max_len, width);
  DecodeResult out;
  out.ids = best.ids;
  out.log_prob = best.log_prob;
  out.text = charset().decode(out.ids);
  return out;
}

}  // namespace trig
