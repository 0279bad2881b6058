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

#include "trig/tensor.hpp"

namespace trig {

/// Canonical fiducial points for the rectified frame: K/2 along the top edge
/// and K/2 along the bottom, evenly spaced in x, inset by a margin so the
/// localization bias atanh(point) stays finite. Shape {K, 2}, (x, y) rows in
/// [-1, 1] normalized coordinates.
Tensor canonical_points(long K, double margin = 0.05);

/// Precomputed thin-plate-spline machinery for a fixed canonical layout and
/// output size. The warp maps output-frame coordinates to input-frame
/// coordinates and is linear in the predicted control points:
///   grid = phat * (delta_inv * [points; 0]).
struct TpsBasis {
  Tensor phat;        // (out_h*out_w) x (K+3): [U(|p - c_k|) ... , 1, x, y]
  Tensor delta_inv;   // (K+3) x (K+3), float64 solve
  long out_h = 0, out_w = 0;
  bool regularized = false;  // diagonal bump 1e-6 was needed
};

/// Builds the basis. Throws NumericError if the TPS system is singular even
/// after regularization (degenerate / collinear canonical points).
TpsBasis build_tps_basis(const Tensor& canonical, long out_h, long out_w);

/// TPS radial kernel U(r) = r^2 log(r), 0 at r = 0.
double tps_kernel(double r);

/// The identity sampling grid of an out_h x out_w frame (normalized coords,
/// x then y per row), i.e. a plain resize when fed to grid_sample.
Tensor identity_grid(long out_h, long out_w);

}  // namespace trig
