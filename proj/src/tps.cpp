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

#include "trig/tps.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "trig/error.hpp"

namespace trig {

double tps_kernel(double r) { return r > 0.0 ? r * r * std::log(r) : 0.0; }

Tensor canonical_points(long K, double margin) {
  if (K < 4 || K % 2) throw DataError("canonical_points: K must be even and >= 4");
  long half = K / 2;
  Tensor pts({K, 2});
  double lo = -1.0 + margin, hi = 1.0 - margin;
  for (long j = 0; j < half; ++j) {
    double x = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(half - 1);
    pts(j, 0) = x;
    pts(j, 1) = lo;        // top row
    pts(half + j, 0) = x;
    pts(half + j, 1) = hi; // bottom row
  }
  return pts;
}

Tensor identity_grid(long out_h, long out_w) {
  Tensor g({out_h * out_w, 2});
  for (long y = 0; y < out_h; ++y)
    for (long x = 0; x < out_w; ++x) {
      long o = y * out_w + x;
      g(o, 0) = out_w > 1 ? -1.0 + 2.0 * x / (out_w - 1) : 0.0;
      g(o, 1) = out_h > 1 ? -1.0 + 2.0 * y / (out_h - 1) : 0.0;
    }
  return g;
}

TpsBasis build_tps_basis(const Tensor& canonical, long out_h, long out_w) {
  long K = canonical.rows();
  if (K < 3) throw NumericError("build_tps_basis: need at least 3 control points");
  long n = K + 3;
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(n, n);
  for (long i = 0; i < K; ++i) {
    for (long j = 0; j < K; ++j) {
      double dx = canonical(i, 0) - canonical(j, 0);
      double dy = canonical(i, 1) - canonical(j, 1);
      delta(i, j) = tps_kernel(std::sqrt(dx * dx + dy * dy));
    }
    delta(i, K) = 1.0;
    delta(i, K + 1) = canonical(i, 0);
    delta(i, K + 2) = canonical(i, 1);
    delta(K, i) = 1.0;
    delta(K + 1, i) = canonical(i, 0);
    delta(K + 2, i) = canonical(i, 1);
  }
  TpsBasis basis;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(delta);
  if (!lu.isInvertible()) {
    // degenerate layout: bump the diagonal and retry once
    Eigen::MatrixXd reg = delta + 1e-6 * Eigen::MatrixXd::Identity(n, n);
    lu.compute(reg);
    basis.regularized = true;
    if (!lu.isInvertible())
      throw NumericError("build_tps_basis: TPS system singular even after regularization");
  }
  Eigen::MatrixXd inv = lu.inverse();
  basis.delta_inv = Tensor({n, n});
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) basis.delta_inv(i, j) = inv(i, j);

  basis.out_h = out_h;
  basis.out_w = out_w;
  basis.phat = Tensor({out_h * out_w, n});
  Tensor grid = identity_grid(out_h, out_w);
  for (long o = 0; o < out_h * out_w; ++o) {
    double px = grid(o, 0), py = grid(o, 1);
    for (long k = 0; k < K; ++k) {
      double dx = px - canonical(k, 0);
      double dy = py - canonical(k, 1);
      basis.phat(o, k) = tps_kernel(std::sqrt(dx * dx + dy * dy));
    }
    basis.phat(o, K) = 1.0;
    basis.phat(o, K + 1) = px;
    basis.phat(o, K + 2) = py;
  }
  return basis;
}

}  // namespace trig
