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
#include <functional>
#include <vector>

#include "trig/tensor.hpp"

namespace trig {

/// Global multiply-accumulate counter. Incremented only by ops whose inner
/// product structure the efficiency model counts: matmul (and the conv im2col
/// product, which is a matmul). Elementwise work, biases, softmax, and
/// normalization do not count.
struct MacCounter {
  static long long count;
  static bool enabled;
  static void add(long long n) {
    if (enabled) count += n;
  }
  static void reset() { count = 0; }
};

/// Eager reverse-mode tape over whole tensors. Every op computes its value
/// immediately and, when gradients are tracked, records a closure that
/// scatters the output gradient back to its inputs. Nodes are created in
/// topological order, so backward() is a single reverse sweep.
class Tape {
 public:
  explicit Tape(bool track_grad = true) : track_(track_grad) {}

  int leaf(Tensor v);
  int constant(Tensor v) { return leaf(std::move(v)); }

  const Tensor& val(int id) const { return nodes_[id].v; }
  /// Gradient buffer, allocated (zero) on first touch.
  Tensor& grad(int id);
  bool has_grad(int id) const { return !nodes_[id].g.empty(); }

  /// Seeds d(root)/d(root) = 1 and sweeps the tape in reverse. root must be
  /// a single-element tensor.
  void backward(int root);

  size_t node_count() const { return nodes_.size(); }

  // ---- elementwise / linear algebra ----
  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);
  int scale(int a, double c);
  int matmul(int a, int b);
  int transpose(int a);
  /// a: R x C plus a length-C (or 1 x C) vector broadcast over rows.
  int add_row_broadcast(int a, int b);
  int concat_rows(const std::vector<int>& parts);
  int concat_cols(int a, int b);
  int slice_rows(int a, long r0, long r1);
  int slice_cols(int a, long c0, long c1);
  int reshape(int a, std::vector<long> s);

  // ---- nonlinearities ----
  int tanh_op(int a);
  int sigmoid_op(int a);
  int relu_op(int a);
  int gelu_op(int a);

  /// Row-wise softmax. Entries where mask==0 are exactly zero in the output
  /// and receive no gradient. mask (if non-empty) must have one byte per
  /// element of a; every row needs at least one visible entry.
  int softmax_rows(int a, const std::vector<uint8_t>& mask = {});

  /// Row-wise layer norm with learnable gain/bias of width cols(a).
  int layer_norm_rows(int a, int gain, int bias, double eps = 1e-5);

  // ---- reductions / loss ----
  int sum_all(int a);
  /// -sum_t log(max(probs[t, picks[t]], clamp)); scalar output.
  int neg_log_pick(int probs, std::vector<int> picks, double clamp = 1e-12);

  // ---- image ops ({C,H,W} tensors) ----
  /// 3x3 convolution, stride 1, zero padding 1. w: {Cout, Cin*9}, b: {Cout}.
  int conv2d_3x3(int x, int w, int b);
  int maxpool2x2(int x);
  /// Per-channel normalization over the spatial extent, gain/bias of width C.
  int instance_norm(int x, int gain, int bias, double eps = 1e-5);
  /// {C,H,W} -> {1,C} spatial mean.
  int global_avg_pool(int x);
  /// Bilinear sampling. grid: {out_h*out_w, 2} normalized coords in [-1,1]
  /// (x then y), clamped to the border. Differentiable in img and grid.
  int grid_sample(int img, int grid, long out_h, long out_w);
  /// Split {C,H,W} into (H/h)*(W/w) patches, row-major over the patch grid,
  /// each flattened channel-major then row-major: dim = C*h*w.
  int patchify(int x, long ph, long pw);

 private:
  struct Node {
    Tensor v;
    Tensor g;
    std::function<void(Tape&)> back;
  };
  std::vector<Node> nodes_;
  bool track_;

  int push(Tensor v, std::function<void(Tape&)> back);
  void accumulate(int id, const Tensor& delta);
};

}  // namespace trig
