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

#include "trig/tape.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "trig/error.hpp"

namespace trig {

long long MacCounter::count = 0;
bool MacCounter::enabled = false;

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

CMapMat as_mat(const Tensor& t) {
  // Rank-1 tensors map to a single row.
  long r = t.shape.size() == 2 ? t.shape[0] : 1;
  long c = t.shape.size() == 2 ? t.shape[1] : t.size();
  return CMapMat(t.data.data(), r, c);
}

MapMat as_mat_mut(Tensor& t) {
  long r = t.shape.size() == 2 ? t.shape[0] : 1;
  long c = t.shape.size() == 2 ? t.shape[1] : t.size();
  return MapMat(t.data.data(), r, c);
}

}  // namespace

int Tape::push(Tensor v, std::function<void(Tape&)> back) {
  Node n;
  n.v = std::move(v);
  if (track_) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(Tensor v) { return push(std::move(v), {}); }

Tensor& Tape::grad(int id) {
  Node& n = nodes_[id];
  if (n.g.empty()) n.g = Tensor(n.v.shape);
  return n.g;
}

void Tape::accumulate(int id, const Tensor& delta) {
  Tensor& g = grad(id);
  for (long i = 0; i < g.size(); ++i) g.data[i] += delta.data[i];
}

void Tape::backward(int root) {
  if (!track_) throw NumericError("backward on a no-grad tape");
  if (nodes_[root].v.size() != 1) throw NumericError("backward root must be scalar");
  grad(root).data[0] = 1.0;
  for (int i = root; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.back && !n.g.empty()) n.back(*this);
  }
}

// ---------------------------------------------------------------------------
// elementwise / linear algebra
// ---------------------------------------------------------------------------

int Tape::add(int a, int b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  if (A.shape != B.shape) throw NumericError("add: shape mismatch");
  Tensor out = A;
  for (long i = 0; i < out.size(); ++i) out.data[i] += B.data[i];
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, b, id](Tape& t) {
    t.accumulate(a, t.grad(id));
    t.accumulate(b, t.grad(id));
  };
  return id;
}

int Tape::sub(int a, int b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  if (A.shape != B.shape) throw NumericError("sub: shape mismatch");
  Tensor out = A;
  for (long i = 0; i < out.size(); ++i) out.data[i] -= B.data[i];
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, b, id](Tape& t) {
    const Tensor& g = t.grad(id);
    t.accumulate(a, g);
    Tensor& gb = t.grad(b);
    for (long i = 0; i < gb.size(); ++i) gb.data[i] -= g.data[i];
  };
  return id;
}

int Tape::mul(int a, int b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  if (A.shape != B.shape) throw NumericError("mul: shape mismatch");
  Tensor out = A;
  for (long i = 0; i < out.size(); ++i) out.data[i] *= B.data[i];
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, b, id](Tape& t) {
    const Tensor& g = t.grad(id);
    Tensor& ga = t.grad(a);
    Tensor& gb = t.grad(b);
    const Tensor& A2 = t.val(a);
    const Tensor& B2 = t.val(b);
    for (long i = 0; i < g.size(); ++i) {
      ga.data[i] += g.data[i] * B2.data[i];
      gb.data[i] += g.data[i] * A2.data[i];
    }
  };
  return id;
}

int Tape::scale(int a, double c) {
  Tensor out = val(a);
  for (double& v : out.data) v *= c;
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, c, id](Tape& t) {
    const Tensor& g = t.grad(id);
    Tensor& ga = t.grad(a);
    for (long i = 0; i < g.size(); ++i) ga.data[i] += c * g.data[i];
  };
  return id;
}

int Tape::matmul(int a, int b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  if (A.shape.size() != 2 || B.shape.size() != 2 || A.cols() != B.rows())
    throw NumericError("matmul: shape mismatch");
  Tensor out({A.rows(), B.cols()});
  as_mat_mut(out).noalias() = as_mat(A) * as_mat(B);
  MacCounter::add(static_cast<long long>(A.rows()) * A.cols() * B.cols());
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, b, id](Tape& t) {
    const Tensor& G = t.grad(id);
    const Tensor& A2 = t.val(a);
    const Tensor& B2 = t.val(b);
    as_mat_mut(t.grad(a)).noalias() += as_mat(G) * as_mat(B2).transpose();
    as_mat_mut(t.grad(b)).noalias() += as_mat(A2).transpose() * as_mat(G);
  };
  return id;
}

int Tape::transpose(int a) {
  const Tensor& A = val(a);
  if (A.shape.size() != 2) throw NumericError("transpose: rank-2 only");
  Tensor out({A.cols(), A.rows()});
  as_mat_mut(out) = as_mat(A).transpose();
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, id](Tape& t) {
    const Tensor& G = t.grad(id);
    as_mat_mut(t.grad(a)) += as_mat(G).transpose();
  };
  return id;
}

int Tape::add_row_broadcast(int a, int b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  long cols = A.shape.size() == 2 ? A.cols() : A.size();
  if (B.size() != cols) throw NumericError("add_row_broadcast: width mismatch");
  Tensor out = A;
  long rows = out.size() / cols;
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) out.data[r * cols + c] += B.data[c];
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, b, id, rows, cols](Tape& t) {
    const Tensor& g = t.grad(id);
    t.accumulate(a, g);
    Tensor& gb = t.grad(b);
    for (long r = 0; r < rows; ++r)
      for (long c = 0; c < cols; ++c) gb.data[c] += g.data[r * cols + c];
  };
  return id;
}

int Tape::concat_rows(const std::vector<int>& parts) {
  long cols = val(parts[0]).cols();
  long rows = 0;
  for (int p : parts) {
    if (val(p).cols() != cols) throw NumericError("concat_rows: width mismatch");
    rows += val(p).rows();
  }
  Tensor out({rows, cols});
  long r = 0;
  for (int p : parts) {
    const Tensor& P = val(p);
    std::copy(P.data.begin(), P.data.end(), out.data.begin() + r * cols);
    r += P.rows();
  }
  int id = push(std::move(out), nullptr);
  std::vector<int> ps = parts;
  nodes_[id].back = [ps, id, cols](Tape& t) {
    const Tensor& g = t.grad(id);
    long r0 = 0;
    for (int p : ps) {
      Tensor& gp = t.grad(p);
      long n = gp.size();
      for (long i = 0; i < n; ++i) gp.data[i] += g.data[r0 * cols + i];
      r0 += t.val(p).rows();
    }
  };
  return id;
}

int Tape::concat_cols(int a, int b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  if (A.rows() != B.rows()) throw NumericError("concat_cols: height mismatch");
  long rows = A.rows(), ca = A.cols(), cb = B.cols();
  Tensor out({rows, ca + cb});
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < ca; ++c) out(r, c) = A(r, c);
    for (long c = 0; c < cb; ++c) out(r, ca + c) = B(r, c);
  }
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, b, id, rows, ca, cb](Tape& t) {
    const Tensor& g = t.grad(id);
    Tensor& ga = t.grad(a);
    Tensor& gb = t.grad(b);
    for (long r = 0; r < rows; ++r) {
      for (long c = 0; c < ca; ++c) ga(r, c) += g.data[r * (ca + cb) + c];
      for (long c = 0; c < cb; ++c) gb(r, c) += g.data[r * (ca + cb) + ca + c];
    }
  };
  return id;
}

int Tape::slice_rows(int a, long r0, long r1) {
  const Tensor& A = val(a);
  long cols = A.cols();
  Tensor out({r1 - r0, cols});
  std::copy(A.data.begin() + r0 * cols, A.data.begin() + r1 * cols, out.data.begin());
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, id, r0, cols](Tape& t) {
    const Tensor& g = t.grad(id);
    Tensor& ga = t.grad(a);
    for (long i = 0; i < g.size(); ++i) ga.data[r0 * cols + i] += g.data[i];
  };
  return id;
}

int Tape::slice_cols(int a, long c0, long c1) {
  const Tensor& A = val(a);
  long rows = A.rows(), cols = A.cols(), w = c1 - c0;
  Tensor out({rows, w});
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < w; ++c) out(r, c) = A(r, c0 + c);
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, id, c0, rows, cols, w](Tape& t) {
    const Tensor& g = t.grad(id);
    Tensor& ga = t.grad(a);
    for (long r = 0; r < rows; ++r)
      for (long c = 0; c < w; ++c) ga.data[r * cols + c0 + c] += g.data[r * w + c];
  };
  return id;
}

int Tape::reshape(int a, std::vector<long> s) {
  const Tensor& A = val(a);
  if (Tensor::numel(s) != A.size()) throw NumericError("reshape: size mismatch");
  Tensor out = A.reshaped(std::move(s));
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, id](Tape& t) {
    const Tensor& g = t.grad(id);
    Tensor& ga = t.grad(a);
    for (long i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
  };
  return id;
}

// ---------------------------------------------------------------------------
// nonlinearities
// ---------------------------------------------------------------------------

int Tape::tanh_op(int a) {
  Tensor out = val(a);
  for (double& v : out.data) v = std::tanh(v);
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, id](Tape& t) {
    const Tensor& g = t.grad(id);
    const Tensor& y = t.val(id);
    Tensor& ga = t.grad(a);
    for (long i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
  };
  return id;
}

int Tape::sigmoid_op(int a) {
  Tensor out = val(a);
  for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, id](Tape& t) {
    const Tensor& g = t.grad(id);
    const Tensor& y = t.val(id);
    Tensor& ga = t.grad(a);
    for (long i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * y.data[i] * (1.0 - y.data[i]);
  };
  return id;
}

int Tape::relu_op(int a) {
  Tensor out = val(a);
  for (double& v : out.data)
    if (v < 0) v = 0;
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, id](Tape& t) {
    const Tensor& g = t.grad(id);
    const Tensor& x = t.val(a);
    Tensor& ga = t.grad(a);
    for (long i = 0; i < g.size(); ++i)
      if (x.data[i] > 0) ga.data[i] += g.data[i];
  };
  return id;
}

int Tape::gelu_op(int a) {
  // Exact form: 0.5 * x * (1 + erf(x / sqrt(2))).
  Tensor out = val(a);
  for (double& v : out.data) v = 0.5 * v * (1.0 + std::erf(v * M_SQRT1_2));
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, id](Tape& t) {
    const Tensor& g = t.grad(id);
    const Tensor& x = t.val(a);
    Tensor& ga = t.grad(a);
    const double inv_sqrt_2pi = 0.3989422804014327;
    for (long i = 0; i < g.size(); ++i) {
      double xv = x.data[i];
      double d = 0.5 * (1.0 + std::erf(xv * M_SQRT1_2)) +
                 xv * inv_sqrt_2pi * std::exp(-0.5 * xv * xv);
      ga.data[i] += g.data[i] * d;
    }
  };
  return id;
}

int Tape::softmax_rows(int a, const std::vector<uint8_t>& mask) {
  const Tensor& A = val(a);
  long rows = A.rows(), cols = A.cols();
  if (!mask.empty() && static_cast<long>(mask.size()) != A.size())
    throw NumericError("softmax_rows: mask size mismatch");
  Tensor out(A.shape);
  for (long r = 0; r < rows; ++r) {
    double m = -std::numeric_limits<double>::infinity();
    for (long c = 0; c < cols; ++c) {
      if (!mask.empty() && !mask[r * cols + c]) continue;
      m = std::max(m, A(r, c));
    }
    if (m == -std::numeric_limits<double>::infinity())
      throw NumericError("softmax_rows: fully masked row");
    double s = 0.0;
    for (long c = 0; c < cols; ++c) {
      if (!mask.empty() && !mask[r * cols + c]) {
        out(r, c) = 0.0;
        continue;
      }
      out(r, c) = std::exp(A(r, c) - m);
      s += out(r, c);
    }
    for (long c = 0; c < cols; ++c) out(r, c) /= s;
  }
  int id = push(std::move(out), nullptr);
  std::vector<uint8_t> mcopy = mask;
  nodes_[id].back = [a, id, mcopy, rows, cols](Tape& t) {
    const Tensor& g = t.grad(id);
    const Tensor& y = t.val(id);
    Tensor& ga = t.grad(a);
    for (long r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (long c = 0; c < cols; ++c) dot += g.data[r * cols + c] * y.data[r * cols + c];
      for (long c = 0; c < cols; ++c) {
        if (!mcopy.empty() && !mcopy[r * cols + c]) continue;
        ga.data[r * cols + c] += y.data[r * cols + c] * (g.data[r * cols + c] - dot);
      }
    }
  };
  return id;
}

int Tape::layer_norm_rows(int a, int gain, int bias, double eps) {
  const Tensor& A = val(a);
  long rows = A.rows(), cols = A.cols();
  const Tensor& G = val(gain);
  const Tensor& B = val(bias);
  if (G.size() != cols || B.size() != cols) throw NumericError("layer_norm: width mismatch");
  Tensor out(A.shape);
  Tensor xhat(A.shape);
  std::vector<double> inv_std(rows);
  for (long r = 0; r < rows; ++r) {
    double mean = 0.0;
    for (long c = 0; c < cols; ++c) mean += A(r, c);
    mean /= cols;
    double var = 0.0;
    for (long c = 0; c < cols; ++c) {
      double d = A(r, c) - mean;
      var += d * d;
    }
    var /= cols;
    double istd = 1.0 / std::sqrt(var + eps);
    inv_std[r] = istd;
    for (long c = 0; c < cols; ++c) {
      double xh = (A(r, c) - mean) * istd;
      xhat(r, c) = xh;
      out(r, c) = xh * G.data[c] + B.data[c];
    }
  }
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, gain, bias, id, xh = std::move(xhat), istd = std::move(inv_std), rows,
                     cols](Tape& t) {
    const Tensor& g = t.grad(id);
    const Tensor& G2 = t.val(gain);
    Tensor& ga = t.grad(a);
    Tensor& gg = t.grad(gain);
    Tensor& gb = t.grad(bias);
    for (long r = 0; r < rows; ++r) {
      double sum_dy = 0.0, sum_dy_xh = 0.0;
      for (long c = 0; c < cols; ++c) {
        double dy = g.data[r * cols + c] * G2.data[c];
        sum_dy += dy;
        sum_dy_xh += dy * xh.data[r * cols + c];
        gg.data[c] += g.data[r * cols + c] * xh.data[r * cols + c];
        gb.data[c] += g.data[r * cols + c];
      }
      for (long c = 0; c < cols; ++c) {
        double dy = g.data[r * cols + c] * G2.data[c];
        ga.data[r * cols + c] +=
            istd[r] * (dy - (sum_dy + xh.data[r * cols + c] * sum_dy_xh) / cols);
      }
    }
  };
  return id;
}

// ---------------------------------------------------------------------------
// reductions / loss
// ---------------------------------------------------------------------------

int Tape::sum_all(int a) {
  const Tensor& A = val(a);
  Tensor out({1, 1});
  for (double v : A.data) out.data[0] += v;
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, id](Tape& t) {
    double g = t.grad(id).data[0];
    Tensor& ga = t.grad(a);
    for (double& v : ga.data) v += g;
  };
  return id;
}

int Tape::neg_log_pick(int probs, std::vector<int> picks, double clamp) {
  const Tensor& P = val(probs);
  long rows = P.rows(), cols = P.cols();
  if (static_cast<long>(picks.size()) != rows) throw NumericError("neg_log_pick: length mismatch");
  Tensor out({1, 1});
  for (long r = 0; r < rows; ++r) {
    double p = P(r, picks[r]);
    out.data[0] -= std::log(std::max(p, clamp));
  }
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [probs, id, pk = std::move(picks), clamp, cols](Tape& t) {
    double g = t.grad(id).data[0];
    const Tensor& P2 = t.val(probs);
    Tensor& gp = t.grad(probs);
    for (size_t r = 0; r < pk.size(); ++r) {
      double p = P2.data[r * cols + pk[r]];
      if (p > clamp) gp.data[r * cols + pk[r]] -= g / p;
    }
  };
  return id;
}

// ---------------------------------------------------------------------------
// image ops
// ---------------------------------------------------------------------------

int Tape::conv2d_3x3(int x, int w, int b) {
  const Tensor& X = val(x);
  const Tensor& W = val(w);
  const Tensor& B = val(b);
  long C = X.shape[0], H = X.shape[1], Wd = X.shape[2];
  long Cout = W.rows();
  if (W.cols() != C * 9 || B.size() != Cout) throw NumericError("conv2d: shape mismatch");
  // im2col: (C*9) x (H*W). Kept alive in the closure for the backward pass.
  Tensor col({C * 9, H * Wd});
  for (long c = 0; c < C; ++c) {
    for (long ky = 0; ky < 3; ++ky) {
      for (long kx = 0; kx < 3; ++kx) {
        long row = (c * 3 + ky) * 3 + kx;
        for (long y = 0; y < H; ++y) {
          long sy = y + ky - 1;
          if (sy < 0 || sy >= H) continue;
          for (long xx = 0; xx < Wd; ++xx) {
            long sx = xx + kx - 1;
            if (sx < 0 || sx >= Wd) continue;
            col(row, y * Wd + xx) = X.at3(c, sy, sx);
          }
        }
      }
    }
  }
  Tensor out({Cout, H, Wd});
  {
    MapMat o(out.data.data(), Cout, H * Wd);
    o.noalias() = as_mat(W) * as_mat(col);
    for (long co = 0; co < Cout; ++co) o.row(co).array() += B.data[co];
  }
  MacCounter::add(static_cast<long long>(Cout) * H * Wd * C * 9);
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [x, w, b, id, col = std::move(col), C, H, Wd, Cout](Tape& t) {
    const Tensor& G = t.grad(id);
    CMapMat g(G.data.data(), Cout, H * Wd);
    // weight and bias grads
    as_mat_mut(t.grad(w)).noalias() += g * as_mat(col).transpose();
    Tensor& gb = t.grad(b);
    for (long co = 0; co < Cout; ++co) gb.data[co] += g.row(co).sum();
    // input grad via col grad scatter
    Tensor gcol({C * 9, H * Wd});
    as_mat_mut(gcol).noalias() = as_mat(t.val(w)).transpose() * g;
    Tensor& gx = t.grad(x);
    for (long c = 0; c < C; ++c) {
      for (long ky = 0; ky < 3; ++ky) {
        for (long kx = 0; kx < 3; ++kx) {
          long row = (c * 3 + ky) * 3 + kx;
          for (long y = 0; y < H; ++y) {
            long sy = y + ky - 1;
            if (sy < 0 || sy >= H) continue;
            for (long xx = 0; xx < Wd; ++xx) {
              long sx = xx + kx - 1;
              if (sx < 0 || sx >= Wd) continue;
              gx.at3(c, sy, sx) += gcol(row, y * Wd + xx);
            }
          }
        }
      }
    }
  };
  return id;
}

int Tape::maxpool2x2(int x) {
  const Tensor& X = val(x);
  long C = X.shape[0], H = X.shape[1], W = X.shape[2];
  if (H % 2 || W % 2) throw NumericError("maxpool2x2: odd spatial dims");
  long Ho = H / 2, Wo = W / 2;
  Tensor out({C, Ho, Wo});
  std::vector<int32_t> argmax(static_cast<size_t>(C) * Ho * Wo);
  for (long c = 0; c < C; ++c) {
    for (long y = 0; y < Ho; ++y) {
      for (long xx = 0; xx < Wo; ++xx) {
        double best = -std::numeric_limits<double>::infinity();
        int32_t bi = 0;
        for (long dy = 0; dy < 2; ++dy) {
          for (long dx = 0; dx < 2; ++dx) {
            long sy = 2 * y + dy, sx = 2 * xx + dx;
            double v = X.at3(c, sy, sx);
            if (v > best) {
              best = v;
              bi = static_cast<int32_t>((c * H + sy) * W + sx);
            }
          }
        }
        out.at3(c, y, xx) = best;
        argmax[(c * Ho + y) * Wo + xx] = bi;
      }
    }
  }
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [x, id, am = std::move(argmax)](Tape& t) {
    const Tensor& g = t.grad(id);
    Tensor& gx = t.grad(x);
    for (size_t i = 0; i < am.size(); ++i) gx.data[am[i]] += g.data[i];
  };
  return id;
}

int Tape::instance_norm(int x, int gain, int bias, double eps) {
  const Tensor& X = val(x);
  long C = X.shape[0], HW = X.shape[1] * X.shape[2];
  const Tensor& G = val(gain);
  const Tensor& B = val(bias);
  if (G.size() != C || B.size() != C) throw NumericError("instance_norm: width mismatch");
  Tensor out(X.shape);
  Tensor xhat(X.shape);
  std::vector<double> inv_std(C);
  for (long c = 0; c < C; ++c) {
    const double* src = X.data.data() + c * HW;
    double mean = 0.0;
    for (long i = 0; i < HW; ++i) mean += src[i];
    mean /= HW;
    double var = 0.0;
    for (long i = 0; i < HW; ++i) {
      double d = src[i] - mean;
      var += d * d;
    }
    var /= HW;
    double istd = 1.0 / std::sqrt(var + eps);
    inv_std[c] = istd;
    for (long i = 0; i < HW; ++i) {
      double xh = (src[i] - mean) * istd;
      xhat.data[c * HW + i] = xh;
      out.data[c * HW + i] = xh * G.data[c] + B.data[c];
    }
  }
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [x, gain, bias, id, xh = std::move(xhat), istd = std::move(inv_std), C,
                     HW](Tape& t) {
    const Tensor& g = t.grad(id);
    const Tensor& G2 = t.val(gain);
    Tensor& gx = t.grad(x);
    Tensor& gg = t.grad(gain);
    Tensor& gb = t.grad(bias);
    for (long c = 0; c < C; ++c) {
      double sum_dy = 0.0, sum_dy_xh = 0.0;
      for (long i = 0; i < HW; ++i) {
        double gv = g.data[c * HW + i];
        double dy = gv * G2.data[c];
        sum_dy += dy;
        sum_dy_xh += dy * xh.data[c * HW + i];
        gg.data[c] += gv * xh.data[c * HW + i];
        gb.data[c] += gv;
      }
      for (long i = 0; i < HW; ++i) {
        double dy = g.data[c * HW + i] * G2.data[c];
        gx.data[c * HW + i] +=
            istd[c] * (dy - (sum_dy + xh.data[c * HW + i] * sum_dy_xh) / HW);
      }
    }
  };
  return id;
}

int Tape::global_avg_pool(int x) {
  const Tensor& X = val(x);
  long C = X.shape[0], HW = X.shape[1] * X.shape[2];
  Tensor out({1, C});
  for (long c = 0; c < C; ++c) {
    double s = 0.0;
    for (long i = 0; i < HW; ++i) s += X.data[c * HW + i];
    out.data[c] = s / HW;
  }
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [x, id, C, HW](Tape& t) {
    const Tensor& g = t.grad(id);
    Tensor& gx = t.grad(x);
    for (long c = 0; c < C; ++c)
      for (long i = 0; i < HW; ++i) gx.data[c * HW + i] += g.data[c] / HW;
  };
  return id;
}

int Tape::grid_sample(int img, int grid, long out_h, long out_w) {
  const Tensor& I = val(img);
  const Tensor& G = val(grid);
  long C = I.shape[0], H = I.shape[1], W = I.shape[2];
  if (G.rows() != out_h * out_w || G.cols() != 2) throw NumericError("grid_sample: bad grid");
  Tensor out({C, out_h, out_w});
  long n = out_h * out_w;
  // Cache the interpolation geometry for backward.
  std::vector<double> wx(n), wy(n);
  std::vector<int32_t> x0(n), y0(n);
  std::vector<uint8_t> in_x(n), in_y(n);  // grad flows to grid only off the clamp
  for (long o = 0; o < n; ++o) {
    double gx = G(o, 0), gy = G(o, 1);
    double px = (gx + 1.0) * 0.5 * (W - 1);
    double py = (gy + 1.0) * 0.5 * (H - 1);
    in_x[o] = px > 0.0 && px < W - 1;
    in_y[o] = py > 0.0 && py < H - 1;
    px = std::min(std::max(px, 0.0), static_cast<double>(W - 1));
    py = std::min(std::max(py, 0.0), static_cast<double>(H - 1));
    long ix = std::min(static_cast<long>(px), W - 2 >= 0 ? W - 2 : 0);
    long iy = std::min(static_cast<long>(py), H - 2 >= 0 ? H - 2 : 0);
    x0[o] = static_cast<int32_t>(ix);
    y0[o] = static_cast<int32_t>(iy);
    wx[o] = px - ix;
    wy[o] = py - iy;
    for (long c = 0; c < C; ++c) {
      double v00 = I.at3(c, iy, ix);
      double v01 = (ix + 1 < W) ? I.at3(c, iy, ix + 1) : v00;
      double v10 = (iy + 1 < H) ? I.at3(c, iy + 1, ix) : v00;
      double v11 = (ix + 1 < W && iy + 1 < H) ? I.at3(c, iy + 1, ix + 1) : v00;
      out.data[c * n + o] = (1 - wy[o]) * ((1 - wx[o]) * v00 + wx[o] * v01) +
                            wy[o] * ((1 - wx[o]) * v10 + wx[o] * v11);
    }
  }
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [img, grid, id, wx = std::move(wx), wy = std::move(wy), x0 = std::move(x0),
                     y0 = std::move(y0), in_x = std::move(in_x), in_y = std::move(in_y), C, H, W,
                     n](Tape& t) {
    const Tensor& g = t.grad(id);
    const Tensor& I2 = t.val(img);
    Tensor& gi = t.grad(img);
    Tensor& gg = t.grad(grid);
    for (long o = 0; o < n; ++o) {
      long ix = x0[o], iy = y0[o];
      long ix1 = std::min(ix + 1, W - 1), iy1 = std::min(iy + 1, H - 1);
      double dgx = 0.0, dgy = 0.0;
      for (long c = 0; c < C; ++c) {
        double go = g.data[c * n + o];
        double v00 = I2.at3(c, iy, ix);
        double v01 = I2.at3(c, iy, ix1);
        double v10 = I2.at3(c, iy1, ix);
        double v11 = I2.at3(c, iy1, ix1);
        gi.at3(c, iy, ix) += go * (1 - wy[o]) * (1 - wx[o]);
        gi.at3(c, iy, ix1) += go * (1 - wy[o]) * wx[o];
        gi.at3(c, iy1, ix) += go * wy[o] * (1 - wx[o]);
        gi.at3(c, iy1, ix1) += go * wy[o] * wx[o];
        dgx += go * ((1 - wy[o]) * (v01 - v00) + wy[o] * (v11 - v10));
        dgy += go * ((1 - wx[o]) * (v10 - v00) + wx[o] * (v11 - v01));
      }
      if (in_x[o]) gg(o, 0) += dgx * 0.5 * (W - 1);
      if (in_y[o]) gg(o, 1) += dgy * 0.5 * (H - 1);
    }
  };
  return id;
}

int Tape::patchify(int x, long ph, long pw) {
  const Tensor& X = val(x);
  long C = X.shape[0], H = X.shape[1], W = X.shape[2];
  if (H % ph || W % pw) throw DataError("patchify: patch size must divide image size");
  long gy = H / ph, gx = W / pw;
  long N = gy * gx, dim = C * ph * pw;
  Tensor out({N, dim});
  for (long py = 0; py < gy; ++py) {
    for (long px = 0; px < gx; ++px) {
      long p = py * gx + px;
      for (long c = 0; c < C; ++c)
        for (long yy = 0; yy < ph; ++yy)
          for (long xx = 0; xx < pw; ++xx)
            out(p, (c * ph + yy) * pw + xx) = X.at3(c, py * ph + yy, px * pw + xx);
    }
  }
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [x, id, C, ph, pw, gy, gx](Tape& t) {
    const Tensor& g = t.grad(id);
    Tensor& gi = t.grad(x);
    long dim = C * ph * pw;
    for (long py = 0; py < gy; ++py)
      for (long px = 0; px < gx; ++px) {
        long p = py * gx + px;
        for (long c = 0; c < C; ++c)
          for (long yy = 0; yy < ph; ++yy)
            for (long xx = 0; xx < pw; ++xx)
              gi.at3(c, py * ph + yy, px * pw + xx) += g.data[p * dim + (c * ph + yy) * pw + xx];
      }
  };
  return id;
}

}  // namespace trig
