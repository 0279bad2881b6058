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

#include <map>
#include <optional>
#include <string>

#include "trig/checkpoint.hpp"
#include "trig/pipeline.hpp"
#include "trig/synthgen.hpp"

namespace trig {

struct TrainConfig {
  long epochs = 10;
  long batch_size = 32;
  double lr = 1.0;
  std::vector<long> decay_epochs;  // 1-based; empty = 80% and 96% of epochs
  double decay_factor = 0.1;
  std::string optimizer = "adadelta";
  double rho = 0.95;
  double eps = 1e-8;
  uint64_t seed = 0;
  bool deterministic = true;  // single-threaded, fixed reduction order
  std::string train_data;     // dataset directory (manifest.tsv inside)
  std::string val_data;
  ModelConfig model;

  std::vector<long> resolved_decay_epochs() const;
  /// Learning rate in force during 1-based epoch `epoch`.
  double lr_at(long epoch) const;

  std::string to_json() const;
  static TrainConfig from_json(const std::string& text);
  static TrainConfig from_json_file(const std::string& path);
};

/// Per-sample cross-entropy: sum of -log p(y_t) over the steps, one prob row
/// per decoding step, targets through eos. Probabilities are clamped at 1e-12
/// inside the log. Batch losses are the mean of these sums.
double ce_loss(const std::vector<Tensor>& prob_rows, const std::vector<int>& target);

/// AdaDelta with decay rho and epsilon eps; update is scaled by lr.
class AdaDelta {
 public:
  AdaDelta(const ParamStore& params, double rho, double eps);
  /// Loads accumulators from a checkpoint's opt_state.
  AdaDelta(const ParamStore& params, double rho, double eps, ParamStore state);

  void step(ParamStore& params, const ParamStore& grads, double lr);
  const ParamStore& state() const { return state_; }

 private:
  double rho_, eps_;
  ParamStore state_;  // accum_g.<name>, accum_dx.<name>
};

struct EvalReport {
  long count = 0;
  long exact = 0;
  double accuracy = 0.0;
  double mean_edit_distance = 0.0;
  std::map<long, std::pair<long, long>> per_length;  // label length -> (exact, count)
};

long edit_distance(const std::string& a, const std::string& b);

/// Exact-match accuracy over a dataset; beam_width 0 = greedy.
EvalReport evaluate(const ParamStore& params, const PipelineContext& ctx,
                    const DatasetManifest& data, long beam_width);

struct TrainResult {
  std::string best_path;
  std::string last_path;
  std::string metrics_path;
  double best_val_acc = 0.0;
  double final_loss = 0.0;
};

/// Deterministic training loop: shuffled minibatches from a seeded RNG,
/// per-epoch loss and held-out accuracy logged as JSON lines, best/last
/// checkpoints written under out_dir. Aborts on non-finite loss.
TrainResult train(const TrainConfig& cfg, const std::string& out_dir,
                  const std::optional<std::string>& resume = std::nullopt);

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  double worst = 0.0;
  std::string worst_param;
  std::vector<GradCheckEntry> per_param;
};

/// Central finite differences against the analytic gradient of
/// the full TRA -> TFE -> AD -> CE pipeline on the given config, for every
/// parameter element. Parameters are perturbed off their symmetric init
/// before checking.
GradCheckReport grad_check(const ModelConfig& cfg, uint64_t seed);

}  // namespace trig
