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

#include <string>
#include <vector>

#include "trig/pipeline.hpp"

namespace trig {

/// Closed-form multiply-accumulate counts per stage. The accounting
/// convention is "matmuls only" (inner products of linear layers, attention
/// score/mix products, conv im2col products); elementwise work, biases,
/// normalization, softmax and bilinear sampling are free. This matches the
/// instrumented counter bit for bit.
struct MacsReport {
  long tokens = 0;  // patch tokens + the initial embedding
  long decode_steps = 0;
  long params = 0;

  // rectification: localization conv stack, fc head, TPS grid solve
  long long tra_conv = 0;
  long long tra_fc = 0;
  long long tra_tps = 0;

  // feature extractor
  long long tfe_embed = 0;       // patch embedding
  long long tfe_projection = 0;  // q/k/v/output projections
  long long tfe_attention = 0;   // score + weighted-sum products
  long long tfe_mlp = 0;

  // decoder, per full run of decode_steps steps
  long long ad_attention = 0;
  long long ad_gru = 0;
  long long ad_output = 0;

  long long tra_total() const { return tra_conv + tra_fc + tra_tps; }
  long long tfe_total() const { return tfe_embed + tfe_projection + tfe_attention + tfe_mlp; }
  long long ad_total() const { return ad_attention + ad_gru + ad_output; }
  long long total() const { return tra_total() + tfe_total() + ad_total(); }

  std::string to_json() const;
};

/// Parameter count straight from the parameter table.
long count_params(const ModelConfig& cfg);

/// Analytical per-stage MAC counts for one image and `steps` decoding steps
/// (0 means cfg.max_len).
MacsReport analytical_macs(const ModelConfig& cfg, long steps = 0);

/// Runs the real pipeline on `image` with the global MAC counter armed and a
/// fixed number of decoding steps (no eos early-exit), returning the counted
/// total. Oracle for analytical_macs.
long long instrumented_macs(const ParamStore& params, const PipelineContext& ctx,
                            const Tensor& image, long steps = 0);

/// Attention rollout: per block A_hat = rownorm(mean over heads + I), chained
/// last block first. Returns the T x T relevance matrix.
Tensor attention_rollout(const AttentionRecord& record);

/// Drops the initial-embedding column and renormalizes each row over the N
/// patch columns. {T, N}.
Tensor rollout_patch_relevance(const Tensor& rollout);

struct RolloutMaps {
  std::string csv_path;
  std::vector<std::string> map_paths;   // one PPM per token row
  std::vector<double> mass_center_x;    // relevance centroid, [0,1] per row
};

/// Writes rollout.csv (full precision, reloadable exactly) plus one heatmap
/// PPM per token row: patch relevance in red over the rectified image.
RolloutMaps export_maps(const ParamStore& params, const PipelineContext& ctx, const Tensor& image,
                        const std::string& out_dir);

}  // namespace trig
