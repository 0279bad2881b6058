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
#include <vector>

#include "trig/rng.hpp"
#include "trig/tape.hpp"

namespace trig::test {

/// Builds a scalar graph from leaf nodes created from `inputs`.
using GraphFn = std::function<int(Tape&, const std::vector<int>&)>;

inline double eval_graph(const GraphFn& f, const std::vector<Tensor>& inputs) {
  Tape tape(false);
  std::vector<int> ids;
  for (const auto& t : inputs) ids.push_back(tape.leaf(t));
  return tape.val(f(tape, ids)).data[0];
}

/// Central finite differences against the tape gradient for every element of
/// every input. Returns the worst relative error.
inline double fd_worst_rel_err(const GraphFn& f, std::vector<Tensor> inputs, double h = 1e-6) {
  std::vector<Tensor> grads;
  {
    Tape tape(true);
    std::vector<int> ids;
    for (const auto& t : inputs) ids.push_back(tape.leaf(t));
    int out = f(tape, ids);
    tape.backward(out);
    for (int id : ids) grads.push_back(tape.has_grad(id) ? tape.grad(id) : Tensor(tape.val(id).shape));
  }
  double worst = 0.0;
  for (size_t k = 0; k < inputs.size(); ++k) {
    for (size_t i = 0; i < inputs[k].data.size(); ++i) {
      double saved = inputs[k].data[i];
      inputs[k].data[i] = saved + h;
      double up = eval_graph(f, inputs);
      inputs[k].data[i] = saved - h;
      double down = eval_graph(f, inputs);
      inputs[k].data[i] = saved;
      double num = (up - down) / (2 * h);
      double ana = grads[k].data[i];
      double rel = std::abs(ana - num) / std::max({std::abs(ana), std::abs(num), 1e-6});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

inline Tensor random_tensor(std::vector<long> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace trig::test
