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

#include <cassert>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <vector>

namespace trig {

/// Dense row-major tensor of doubles. Rank 1..3 is all the model needs:
/// matrices for sequence data, {C,H,W} for images.
struct Tensor {
  std::vector<long> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<long> s) : shape(std::move(s)), data(numel(shape), 0.0) {}

  static long numel(const std::vector<long>& s) {
    long n = 1;
    for (long d : s) n *= d;
    return n;
  }

  static Tensor zeros(std::vector<long> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<long> s, double v) {
    Tensor t(std::move(s));
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }
  static Tensor identity(long n) {
    Tensor t({n, n});
    for (long i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
  }

  long size() const { return static_cast<long>(data.size()); }
  bool empty() const { return data.empty(); }

  long rows() const { assert(shape.size() == 2); return shape[0]; }
  long cols() const { assert(shape.size() == 2); return shape[1]; }

  double& operator()(long r, long c) {
    assert(shape.size() == 2);
    return data[static_cast<size_t>(r) * shape[1] + c];
  }
  double operator()(long r, long c) const {
    assert(shape.size() == 2);
    return data[static_cast<size_t>(r) * shape[1] + c];
  }

  // {C,H,W} accessors.
  double& at3(long c, long y, long x) {
    assert(shape.size() == 3);
    return data[(static_cast<size_t>(c) * shape[1] + y) * shape[2] + x];
  }
  double at3(long c, long y, long x) const {
    assert(shape.size() == 3);
    return data[(static_cast<size_t>(c) * shape[1] + y) * shape[2] + x];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  Tensor reshaped(std::vector<long> s) const {
    assert(numel(s) == size());
    Tensor t;
    t.shape = std::move(s);
    t.data = data;
    return t;
  }
};

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  assert(a.size() == b.size());
  double m = 0.0;
  for (long i = 0; i < a.size(); ++i) {
    double d = a.data[i] - b.data[i];
    if (d < 0) d = -d;
    if (d > m) m = d;
  }
  return m;
}

inline bool bitwise_equal(const Tensor& a, const Tensor& b) {
  return a.shape == b.shape && a.data == b.data;
}

}  // namespace trig
