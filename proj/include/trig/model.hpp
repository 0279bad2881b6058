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

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "trig/tape.hpp"
#include "trig/tensor.hpp"

namespace trig {

/// Every architectural knob in one place. Serialized into checkpoints and
/// training configs.
struct ModelConfig {
  // input / rectification
  long canvas_h = 64;
  long canvas_w = 256;
  bool use_tps = true;
  long rect_h = 32;
  long rect_w = 100;
  long num_ctrl = 20;                      // fiducial points, half per horizontal edge
  std::array<long, 4> loc_channels{32, 64, 128, 256};
  long loc_fc_hidden = 256;

  // transformer feature extractor
  long patch_h = 32;
  long patch_w = 4;
  long depth = 12;
  long heads = 16;
  long dim = 512;
  long mlp_ratio = 4;                      // MLP inner width = mlp_ratio * dim
  bool skip_attention = true;              // residual pre-softmax score skip
  bool window_mask = false;
  long mask_radius = 0;
  bool mask_sees_init = true;              // feature rows may attend to token 0

  // decoder
  bool init_guidance = true;               // s_0 = f_init (otherwise zero)
  long attn_dim = 0;                       // 0 means "= dim"
  long max_len = 26;                       // label ids incl. eos

  long attention_dim() const { return attn_dim > 0 ? attn_dim : dim; }
  long num_patches() const { return (rect_h / patch_h) * (rect_w / patch_w); }
  long num_tokens() const { return num_patches() + 1; }
  long patch_dim() const { return 3 * patch_h * patch_w; }

  void validate() const;  // throws DataError on inconsistent geometry

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
};

/// Named presets: "paper-1d", "paper-2d", "toy", "tiny" (verification size).
ModelConfig preset_config(const std::string& name);

struct ParamDef {
  std::string name;
  std::vector<long> shape;
};

/// Deterministic enumeration of every parameter tensor for a config. The
/// order is the checkpoint order.
std::vector<ParamDef> param_defs(const ModelConfig& cfg);

/// Ordered named parameter tensors.
struct ParamStore {
  std::vector<std::string> names;
  std::unordered_map<std::string, Tensor> tensors;

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool has(const std::string& name) const { return tensors.count(name) > 0; }
  long total_size() const;
};

/// Initialization: linear/conv weights N(0, 0.02), biases zero, norm gain 1,
/// positional table and initial embedding N(0, 0.02). The localization output
/// layer is zeroed with bias atanh(canonical points) so the rectifier starts
/// as the identity resize.
ParamStore init_params(const ModelConfig& cfg, uint64_t seed);

/// Parameter nodes on one tape, created lazily and cached by name, so a
/// forward pass references each parameter exactly once.
class Vars {
 public:
  Vars(Tape& tape, const ParamStore& params) : tape_(tape), params_(params) {}

  int p(const std::string& name);

  /// Adds each referenced parameter's tape gradient into `sink` (same names).
  void accumulate_grads(ParamStore& sink) const;

  Tape& tape() { return tape_; }
  const ParamStore& params() const { return params_; }

 private:
  Tape& tape_;
  const ParamStore& params_;
  std::unordered_map<std::string, int> ids_;
};

}  // namespace trig
