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

#include <cmath>

#include <doctest.h>

#include "test_util.hpp"
#include "trig/error.hpp"

using namespace trig;
using test::fd_worst_rel_err;
using test::random_tensor;

TEST_CASE("matmul matches a triple-loop oracle and counts MACs") {
  Rng rng(7);
  Tensor a = random_tensor({3, 5}, rng);
  Tensor b = random_tensor({5, 4}, rng);
  Tape tape(false);
  MacCounter::reset();
  MacCounter::enabled = true;
  int c = tape.matmul(tape.leaf(a), tape.leaf(b));
  MacCounter::enabled = false;
  CHECK(MacCounter::count == 3 * 5 * 4);

  for (long i = 0; i < 3; ++i)
    for (long j = 0; j < 4; ++j) {
      double s = 0.0;
      for (long k = 0; k < 5; ++k) s += a(i, k) * b(k, j);
      CHECK(tape.val(c)(i, j) == doctest::Approx(s).epsilon(1e-12));
    }
}

TEST_CASE("elementwise and linear ops pass finite differences") {
  Rng rng(11);
  auto scalarize = [](Tape& t, int x) { return t.sum_all(t.mul(x, x)); };

  SUBCASE("matmul + transpose + add") {
    auto f = [&](Tape& t, const std::vector<int>& in) {
      return scalarize(t, t.matmul(in[0], t.transpose(t.add(in[1], in[1]))));
    };
    CHECK(fd_worst_rel_err(f, {random_tensor({2, 3}, rng), random_tensor({4, 3}, rng)}) < 1e-6);
  }
  SUBCASE("broadcast, concat, slices, reshape") {
    auto f = [&](Tape& t, const std::vector<int>& in) {
      int x = t.add_row_broadcast(in[0], in[1]);
      x = t.concat_cols(x, in[0]);
      x = t.concat_rows({x, x});
      x = t.slice_rows(x, 1, 3);
      x = t.slice_cols(x, 1, 5);
      return scalarize(t, t.reshape(x, {4, 2}));
    };
    CHECK(fd_worst_rel_err(f, {random_tensor({2, 3}, rng), random_tensor({1, 3}, rng)}) < 1e-6);
  }
  SUBCASE("nonlinearities") {
    auto f = [&](Tape& t, const std::vector<int>& in) {
      int x = t.tanh_op(in[0]);
      x = t.add(x, t.sigmoid_op(in[0]));
      x = t.add(x, t.gelu_op(in[0]));
      x = t.add(x, t.relu_op(in[0]));
      return scalarize(t, x);
    };
    // keep away from relu's kink
    Tensor x = random_tensor({3, 3}, rng);
    for (double& v : x.data) v += v >= 0 ? 0.1 : -0.1;
    CHECK(fd_worst_rel_err(f, {x}) < 1e-6);
  }
  SUBCASE("softmax, layer norm, loss") {
    auto f = [&](Tape& t, const std::vector<int>& in) {
      int x = t.layer_norm_rows(in[0], in[1], in[2]);
      int p = t.softmax_rows(x);
      return t.neg_log_pick(p, {1, 0, 2});
    };
    CHECK(fd_worst_rel_err(f,
                           {random_tensor({3, 4}, rng), random_tensor({1, 4}, rng),
                            random_tensor({1, 4}, rng)}) < 1e-5);
  }
}

TEST_CASE("gelu matches the exact erf formulation") {
  Tape tape(false);
  Tensor x({1, 3});
  x.data = {-1.5, 0.0, 2.0};
  int g = tape.gelu_op(tape.leaf(x));
  for (int i = 0; i < 3; ++i) {
    double v = x.data[i];
    double want = 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0)));
    CHECK(tape.val(g).data[i] == doctest::Approx(want).epsilon(1e-15));
  }
}

TEST_CASE("masked softmax zeroes hidden entries and renormalizes") {
  Rng rng(3);
  Tensor x = random_tensor({2, 4}, rng);
  std::vector<uint8_t> mask = {1, 0, 1, 0, 0, 1, 1, 1};
  Tape tape(true);
  int in = tape.leaf(x);
  int p = tape.softmax_rows(in, mask);
  const Tensor& v = tape.val(p);
  CHECK(v(0, 1) == 0.0);
  CHECK(v(0, 3) == 0.0);
  CHECK(v(1, 0) == 0.0);
  for (long r = 0; r < 2; ++r) {
    double s = 0.0;
    for (long c = 0; c < 4; ++c) s += v(r, c);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  auto f = [&](Tape& t, const std::vector<int>& ids) {
    return t.neg_log_pick(t.softmax_rows(ids[0], mask), {0, 2});
  };
  CHECK(fd_worst_rel_err(f, {x}) < 1e-6);

  std::vector<uint8_t> dead = {0, 0, 0, 0, 1, 1, 1, 1};
  CHECK_THROWS_AS((void)tape.softmax_rows(in, dead), NumericError);
}

TEST_CASE("conv2d_3x3 matches a direct convolution oracle") {
  Rng rng(5);
  Tensor x = random_tensor({2, 4, 5}, rng);
  Tensor w = random_tensor({3, 2 * 9}, rng);
  Tensor b = random_tensor({3}, rng);
  Tape tape(false);
  MacCounter::reset();
  MacCounter::enabled = true;
  int y = tape.conv2d_3x3(tape.leaf(x), tape.leaf(w), tape.leaf(b));
  MacCounter::enabled = false;
  CHECK(MacCounter::count == 3 * 4 * 5 * 2 * 9);
  for (long co = 0; co < 3; ++co)
    for (long oy = 0; oy < 4; ++oy)
      for (long ox = 0; ox < 5; ++ox) {
        double s = b.data[co];
        for (long ci = 0; ci < 2; ++ci)
          for (long ky = -1; ky <= 1; ++ky)
            for (long kx = -1; kx <= 1; ++kx) {
              long iy = oy + ky, ix = ox + kx;
              if (iy < 0 || iy >= 4 || ix < 0 || ix >= 5) continue;  // zero pad
              s += x.at3(ci, iy, ix) * w(co, ci * 9 + (ky + 1) * 3 + (kx + 1));
            }
        CHECK(tape.val(y).at3(co, oy, ox) == doctest::Approx(s).epsilon(1e-12));
      }

  auto f = [&](Tape& t, const std::vector<int>& in) {
    return t.sum_all(t.mul(t.conv2d_3x3(in[0], in[1], in[2]), t.conv2d_3x3(in[0], in[1], in[2])));
  };
  CHECK(fd_worst_rel_err(f, {x, w, b}) < 1e-5);
}

TEST_CASE("maxpool routes gradient to the argmax only") {
  Tensor x({1, 2, 2});
  x.data = {1.0, 4.0, 2.0, 3.0};
  Tape tape(true);
  int in = tape.leaf(x);
  int y = tape.maxpool2x2(in);
  CHECK(tape.val(y).data[0] == 4.0);
  tape.backward(tape.sum_all(y));
  const Tensor& g = tape.grad(in);
  CHECK(g.data[0] == 0.0);
  CHECK(g.data[1] == 1.0);
  CHECK(g.data[2] == 0.0);
  CHECK(g.data[3] == 0.0);
}

TEST_CASE("image-path ops pass finite differences") {
  Rng rng(9);
  Tensor img = random_tensor({2, 4, 4}, rng, 0.1, 0.9);
  SUBCASE("instance norm + pool + gap") {
    Tensor gain = random_tensor({2}, rng, 0.5, 1.5);
    Tensor bias = random_tensor({2}, rng);
    auto f = [&](Tape& t, const std::vector<int>& in) {
      int y = t.instance_norm(in[0], in[1], in[2]);
      y = t.maxpool2x2(y);
      return t.sum_all(t.mul(t.global_avg_pool(y), t.global_avg_pool(y)));
    };
    CHECK(fd_worst_rel_err(f, {img, gain, bias}) < 1e-5);
  }
  SUBCASE("grid_sample in image and grid") {
    // interior, non-lattice sample points: bilinear weights are smooth there
    Tensor grid({6, 2});
    Rng g(21);
    for (double& v : grid.data) v = g.uniform(-0.7, 0.7);
    auto f = [&](Tape& t, const std::vector<int>& in) {
      int y = t.grid_sample(in[0], in[1], 2, 3);
      return t.sum_all(t.mul(y, y));
    };
    CHECK(fd_worst_rel_err(f, {img, grid}) < 1e-5);
  }
  SUBCASE("patchify layout and gradient") {
    Tape tape(false);
    int p = tape.patchify(tape.leaf(img), 2, 2);
    const Tensor& v = tape.val(p);
    CHECK(v.rows() == 4);
    CHECK(v.cols() == 8);
    // patch 1 = rows 0..1, cols 2..3; flattened channel-major then row-major
    CHECK(v(1, 0) == img.at3(0, 0, 2));
    CHECK(v(1, 3) == img.at3(0, 1, 3));
    CHECK(v(1, 4) == img.at3(1, 0, 2));
    auto f = [&](Tape& t, const std::vector<int>& in) {
      int y = t.patchify(in[0], 2, 2);
      return t.sum_all(t.mul(y, y));
    };
    CHECK(fd_worst_rel_err(f, {img}) < 1e-6);
  }
}

TEST_CASE("backward accumulates over shared subexpressions") {
  Tensor x({1, 1});
  x.data = {3.0};
  Tape tape(true);
  int a = tape.leaf(x);
  int y = tape.add(tape.mul(a, a), a);  // x^2 + x, dy/dx = 2x + 1
  tape.backward(y);
  CHECK(tape.grad(a).data[0] == doctest::Approx(7.0).epsilon(1e-12));
}
