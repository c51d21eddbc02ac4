// nn/tensor.hpp

// Copyright 2026  avlearn authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Reverse-mode tape over dense row-major 2-D tensors. The tape owns every
// intermediate node; ops append nodes whose backward closures accumulate into
// parent grads. Creation order is a topological order, so backward() is a
// single reverse sweep. The scalar type is a template parameter: f32 for
// training, f64 for finite-difference verification.

#ifndef AVLEARN_NN_TENSOR_HPP
#define AVLEARN_NN_TENSOR_HPP

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "util/common.hpp"

namespace avlearn {

template <typename S>
struct ParamT {
  std::string name;
  int rows = 0, cols = 0;
  std::vector<S> value, grad;
  std::vector<S> adam_m, adam_v;

  ParamT() = default;
  ParamT(std::string n, int r, int c)
      : name(std::move(n)), rows(r), cols(c), value(size_t(r) * c, S(0)),
        grad(size_t(r) * c, S(0)) {}
  size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), S(0)); }
};

template <typename S>
class TapeT {
 public:
  using EMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Map = Eigen::Map<EMat>;
  using CMap = Eigen::Map<const EMat>;

  struct Node {
    int rows = 0, cols = 0;
    std::vector<S> val;
    std::vector<S> grad;  // allocated only when needs_grad
    bool needs_grad = false;
    std::function<void()> back;

    S &v(int r, int c) { return val[size_t(r) * cols + c]; }
    S v(int r, int c) const { return val[size_t(r) * cols + c]; }
    size_t size() const { return val.size(); }
    Map vmap() { return Map(val.data(), rows, cols); }
    Map gmap() { return Map(grad.data(), rows, cols); }
  };

  size_t num_nodes() const { return nodes_.size(); }

  // ---- creation ----

  Node *raw(int r, int c, bool needs_grad) {
    nodes_.emplace_back();
    Node *n = &nodes_.back();
    n->rows = r;
    n->cols = c;
    n->val.assign(size_t(r) * c, S(0));
    n->needs_grad = needs_grad;
    if (needs_grad) n->grad.assign(size_t(r) * c, S(0));
    return n;
  }

  Node *leaf(ParamT<S> &p) {
    Node *n = raw(p.rows, p.cols, true);
    n->val = p.value;
    ParamT<S> *pp = &p;
    n->back = [n, pp] {
      for (size_t i = 0; i < n->grad.size(); ++i) pp->grad[i] += n->grad[i];
    };
    return n;
  }

  Node *input(const Mat &m) {
    Node *n = raw(m.rows, m.cols, false);
    for (size_t i = 0; i < m.d.size(); ++i) n->val[i] = S(m.d[i]);
    return n;
  }

  Node *input(int r, int c, const std::vector<S> &data) {
    Node *n = raw(r, c, false);
    n->val = data;
    return n;
  }

  Node *zeros(int r, int c) { return raw(r, c, false); }

  // ---- shape helpers ----

  static void check_same_shape(const Node *a, const Node *b, const char *op) {
    if (a->rows != b->rows || a->cols != b->cols)
      throw ShapeError(std::string(op) + ": shape mismatch [" + std::to_string(a->rows) + "x" +
                       std::to_string(a->cols) + "] vs [" + std::to_string(b->rows) + "x" +
                       std::to_string(b->cols) + "]");
  }

  // ---- primitives ----

  Node *matmul(Node *a, Node *b, bool ta = false, bool tb = false) {
    const int am = ta ? a->cols : a->rows, ak = ta ? a->rows : a->cols;
    const int bk = tb ? b->cols : b->rows, bn = tb ? b->rows : b->cols;
    if (ak != bk)
      throw ShapeError("matmul: inner dims [" + std::to_string(a->rows) + "x" +
                       std::to_string(a->cols) + "] vs [" + std::to_string(b->rows) + "x" +
                       std::to_string(b->cols) + "]");
    Node *o = raw(am, bn, a->needs_grad || b->needs_grad);
    {
      CMap A(a->val.data(), a->rows, a->cols), B(b->val.data(), b->rows, b->cols);
      Map O(o->val.data(), am, bn);
      if (!ta && !tb) O.noalias() = A * B;
      else if (ta && !tb) O.noalias() = A.transpose() * B;
      else if (!ta && tb) O.noalias() = A * B.transpose();
      else O.noalias() = A.transpose() * B.transpose();
    }
    if (o->needs_grad) {
      o->back = [a, b, o, ta, tb] {
        CMap A(a->val.data(), a->rows, a->cols), B(b->val.data(), b->rows, b->cols);
        CMap dO(o->grad.data(), o->rows, o->cols);
        if (a->needs_grad) {
          Map dA(a->grad.data(), a->rows, a->cols);
          if (!ta) dA.noalias() += tb ? (dO * B).eval() : (dO * B.transpose()).eval();
          else dA.noalias() += tb ? (B.transpose() * dO.transpose()).eval() : (B * dO.transpose()).eval();
        }
        if (b->needs_grad) {
          Map dB(b->grad.data(), b->rows, b->cols);
          if (!tb) dB.noalias() += ta ? (A * dO).eval() : (A.transpose() * dO).eval();
          else dB.noalias() += ta ? (dO.transpose() * A.transpose()).eval() : (dO.transpose() * A).eval();
        }
      };
    }
    return o;
  }

  Node *add(Node *a, Node *b) {
    check_same_shape(a, b, "add");
    Node *o = raw(a->rows, a->cols, a->needs_grad || b->needs_grad);
    for (size_t i = 0; i < o->size(); ++i) o->val[i] = a->val[i] + b->val[i];
    if (o->needs_grad)
      o->back = [a, b, o] {
        if (a->needs_grad)
          for (size_t i = 0; i < o->size(); ++i) a->grad[i] += o->grad[i];
        if (b->needs_grad)
          for (size_t i = 0; i < o->size(); ++i) b->grad[i] += o->grad[i];
      };
    return o;
  }

  // Broadcast a [1 x C] row vector over every row.
  Node *add_rowvec(Node *x, Node *b) {
    if (b->rows != 1 || b->cols != x->cols) throw ShapeError("add_rowvec: bias must be [1 x cols]");
    Node *o = raw(x->rows, x->cols, x->needs_grad || b->needs_grad);
    for (int r = 0; r < x->rows; ++r)
      for (int c = 0; c < x->cols; ++c) o->v(r, c) = x->v(r, c) + b->val[size_t(c)];
    if (o->needs_grad)
      o->back = [x, b, o] {
        if (x->needs_grad)
          for (size_t i = 0; i < o->size(); ++i) x->grad[i] += o->grad[i];
        if (b->needs_grad)
          for (int r = 0; r < o->rows; ++r)
            for (int c = 0; c < o->cols; ++c) b->grad[size_t(c)] += o->grad[size_t(r) * o->cols + c];
      };
    return o;
  }

  Node *mul_rowvec(Node *x, Node *g) {
    if (g->rows != 1 || g->cols != x->cols) throw ShapeError("mul_rowvec: gain must be [1 x cols]");
    Node *o = raw(x->rows, x->cols, x->needs_grad || g->needs_grad);
    for (int r = 0; r < x->rows; ++r)
      for (int c = 0; c < x->cols; ++c) o->v(r, c) = x->v(r, c) * g->val[size_t(c)];
    if (o->needs_grad)
      o->back = [x, g, o] {
        for (int r = 0; r < o->rows; ++r)
          for (int c = 0; c < o->cols; ++c) {
            S d = o->grad[size_t(r) * o->cols + c];
            if (x->needs_grad) x->grad[size_t(r) * x->cols + c] += d * g->val[size_t(c)];
            if (g->needs_grad) g->grad[size_t(c)] += d * x->v(r, c);
          }
      };
    return o;
  }

  Node *mul(Node *a, Node *b) {
    check_same_shape(a, b, "mul");
    Node *o = raw(a->rows, a->cols, a->needs_grad || b->needs_grad);
    for (size_t i = 0; i < o->size(); ++i) o->val[i] = a->val[i] * b->val[i];
    if (o->needs_grad)
      o->back = [a, b, o] {
        for (size_t i = 0; i < o->size(); ++i) {
          if (a->needs_grad) a->grad[i] += o->grad[i] * b->val[i];
          if (b->needs_grad) b->grad[i] += o->grad[i] * a->val[i];
        }
      };
    return o;
  }

  Node *scale(Node *a, S k) {
    Node *o = raw(a->rows, a->cols, a->needs_grad);
    for (size_t i = 0; i < o->size(); ++i) o->val[i] = a->val[i] * k;
    if (o->needs_grad)
      o->back = [a, o, k] {
        for (size_t i = 0; i < o->size(); ++i) a->grad[i] += o->grad[i] * k;
      };
    return o;
  }

  Node *relu(Node *a) {
    Node *o = raw(a->rows, a->cols, a->needs_grad);
    for (size_t i = 0; i < o->size(); ++i) o->val[i] = a->val[i] > S(0) ? a->val[i] : S(0);
    if (o->needs_grad)
      o->back = [a, o] {
        for (size_t i = 0; i < o->size(); ++i)
          if (a->val[i] > S(0)) a->grad[i] += o->grad[i];
      };
    return o;
  }

  Node *gelu(Node *a) {
    Node *o = raw(a->rows, a->cols, a->needs_grad);
    const S inv_sqrt2 = S(0.7071067811865475);
    for (size_t i = 0; i < o->size(); ++i)
      o->val[i] = S(0.5) * a->val[i] * (S(1) + std::erf(a->val[i] * inv_sqrt2));
    if (o->needs_grad)
      o->back = [a, o, inv_sqrt2] {
        const S inv_sqrt2pi = S(0.3989422804014327);
        for (size_t i = 0; i < o->size(); ++i) {
          S x = a->val[i];
          S d = S(0.5) * (S(1) + std::erf(x * inv_sqrt2)) +
                x * inv_sqrt2pi * std::exp(S(-0.5) * x * x);
          a->grad[i] += o->grad[i] * d;
        }
      };
    return o;
  }

  // Per-row standardization, pre-affine.
  Node *layernorm_rows(Node *x, S eps = S(1e-5)) {
    Node *o = raw(x->rows, x->cols, x->needs_grad);
    const int C = x->cols;
    std::vector<S> inv_sigma(size_t(x->rows));
    for (int r = 0; r < x->rows; ++r) {
      S mu = 0;
      for (int c = 0; c < C; ++c) mu += x->v(r, c);
      mu /= S(C);
      S var = 0;
      for (int c = 0; c < C; ++c) {
        S d = x->v(r, c) - mu;
        var += d * d;
      }
      var /= S(C);
      S is = S(1) / std::sqrt(var + eps);
      inv_sigma[size_t(r)] = is;
      for (int c = 0; c < C; ++c) o->v(r, c) = (x->v(r, c) - mu) * is;
    }
    if (o->needs_grad)
      o->back = [x, o, inv_sigma = std::move(inv_sigma)] {
        const int C = x->cols;
        for (int r = 0; r < x->rows; ++r) {
          S mean_dy = 0, mean_dyy = 0;
          for (int c = 0; c < C; ++c) {
            S dy = o->grad[size_t(r) * C + c];
            mean_dy += dy;
            mean_dyy += dy * o->v(r, c);
          }
          mean_dy /= S(C);
          mean_dyy /= S(C);
          for (int c = 0; c < C; ++c) {
            S dy = o->grad[size_t(r) * C + c];
            x->grad[size_t(r) * C + c] +=
                inv_sigma[size_t(r)] * (dy - mean_dy - o->v(r, c) * mean_dyy);
          }
        }
      };
    return o;
  }

  Node *softmax_rows(Node *x) {
    Node *o = raw(x->rows, x->cols, x->needs_grad);
    for (int r = 0; r < x->rows; ++r) {
      S mx = x->v(r, 0);
      for (int c = 1; c < x->cols; ++c) mx = std::max(mx, x->v(r, c));
      S z = 0;
      for (int c = 0; c < x->cols; ++c) z += std::exp(x->v(r, c) - mx);
      for (int c = 0; c < x->cols; ++c) o->v(r, c) = std::exp(x->v(r, c) - mx) / z;
    }
    if (o->needs_grad)
      o->back = [x, o] {
        for (int r = 0; r < x->rows; ++r) {
          S dot = 0;
          for (int c = 0; c < x->cols; ++c) dot += o->grad[size_t(r) * o->cols + c] * o->v(r, c);
          for (int c = 0; c < x->cols; ++c)
            x->grad[size_t(r) * x->cols + c] +=
                (o->grad[size_t(r) * o->cols + c] - dot) * o->v(r, c);
        }
      };
    return o;
  }

  Node *log_softmax_rows(Node *x) {
    Node *o = raw(x->rows, x->cols, x->needs_grad);
    for (int r = 0; r < x->rows; ++r) {
      S mx = x->v(r, 0);
      for (int c = 1; c < x->cols; ++c) mx = std::max(mx, x->v(r, c));
      S z = 0;
      for (int c = 0; c < x->cols; ++c) z += std::exp(x->v(r, c) - mx);
      S lz = mx + std::log(z);
      for (int c = 0; c < x->cols; ++c) o->v(r, c) = x->v(r, c) - lz;
    }
    if (o->needs_grad)
      o->back = [x, o] {
        for (int r = 0; r < x->rows; ++r) {
          S sum_dy = 0;
          for (int c = 0; c < x->cols; ++c) sum_dy += o->grad[size_t(r) * o->cols + c];
          for (int c = 0; c < x->cols; ++c)
            x->grad[size_t(r) * x->cols + c] +=
                o->grad[size_t(r) * o->cols + c] - std::exp(o->v(r, c)) * sum_dy;
        }
      };
    return o;
  }

  // Inverted dropout with a saved mask; backward routes only kept positions.
  Node *dropout(Node *x, double p, std::mt19937_64 &rng) {
    if (p < 0.0 || p >= 1.0) throw ParamError("dropout: p must be in [0, 1)");
    if (p == 0.0) return x;
    Node *o = raw(x->rows, x->cols, x->needs_grad);
    std::bernoulli_distribution keep(1.0 - p);
    std::vector<uint8_t> mask(o->size());
    const S inv = S(1.0 / (1.0 - p));
    for (size_t i = 0; i < o->size(); ++i) {
      mask[i] = keep(rng) ? 1 : 0;
      o->val[i] = mask[i] ? x->val[i] * inv : S(0);
    }
    if (o->needs_grad)
      o->back = [x, o, mask = std::move(mask), inv] {
        for (size_t i = 0; i < o->size(); ++i)
          if (mask[i]) x->grad[i] += o->grad[i] * inv;
      };
    return o;
  }

  Node *concat_cols(Node *a, Node *b) {
    if (a->rows != b->rows) throw ShapeError("concat_cols: row mismatch");
    Node *o = raw(a->rows, a->cols + b->cols, a->needs_grad || b->needs_grad);
    for (int r = 0; r < a->rows; ++r) {
      for (int c = 0; c < a->cols; ++c) o->v(r, c) = a->v(r, c);
      for (int c = 0; c < b->cols; ++c) o->v(r, a->cols + c) = b->v(r, c);
    }
    if (o->needs_grad)
      o->back = [a, b, o] {
        for (int r = 0; r < o->rows; ++r) {
          if (a->needs_grad)
            for (int c = 0; c < a->cols; ++c)
              a->grad[size_t(r) * a->cols + c] += o->grad[size_t(r) * o->cols + c];
          if (b->needs_grad)
            for (int c = 0; c < b->cols; ++c)
              b->grad[size_t(r) * b->cols + c] += o->grad[size_t(r) * o->cols + a->cols + c];
        }
      };
    return o;
  }

  Node *slice_cols(Node *x, int c0, int c1) {
    if (c0 < 0 || c1 > x->cols || c0 >= c1) throw ShapeError("slice_cols: bad range");
    Node *o = raw(x->rows, c1 - c0, x->needs_grad);
    for (int r = 0; r < x->rows; ++r)
      for (int c = c0; c < c1; ++c) o->v(r, c - c0) = x->v(r, c);
    if (o->needs_grad)
      o->back = [x, o, c0] {
        for (int r = 0; r < o->rows; ++r)
          for (int c = 0; c < o->cols; ++c)
            x->grad[size_t(r) * x->cols + c0 + c] += o->grad[size_t(r) * o->cols + c];
      };
    return o;
  }

  // Rows with flag set are replaced by a learned [1 x C] embedding.
  Node *replace_rows(Node *x, const std::vector<uint8_t> &flags, Node *emb) {
    if (emb->rows != 1 || emb->cols != x->cols)
      throw ShapeError("replace_rows: embedding must be [1 x cols]");
    if (int(flags.size()) != x->rows) throw ShapeError("replace_rows: flag count mismatch");
    Node *o = raw(x->rows, x->cols, x->needs_grad || emb->needs_grad);
    for (int r = 0; r < x->rows; ++r)
      for (int c = 0; c < x->cols; ++c)
        o->v(r, c) = flags[size_t(r)] ? emb->val[size_t(c)] : x->v(r, c);
    if (o->needs_grad) {
      std::vector<uint8_t> fl = flags;
      o->back = [x, emb, o, fl = std::move(fl)] {
        for (int r = 0; r < o->rows; ++r)
          for (int c = 0; c < o->cols; ++c) {
            S d = o->grad[size_t(r) * o->cols + c];
            if (fl[size_t(r)]) {
              if (emb->needs_grad) emb->grad[size_t(c)] += d;
            } else {
              if (x->needs_grad) x->grad[size_t(r) * x->cols + c] += d;
            }
          }
      };
    }
    return o;
  }

  // Depthwise temporal convolution over rows (time), same zero padding.
  // w is [K x C]; out[t][c] = sum_k w[k][c] * x[t + k - K/2][c].
  Node *depthwise_conv_time(Node *x, Node *w) {
    if (w->cols != x->cols) throw ShapeError("depthwise_conv_time: channel mismatch");
    const int K = w->rows, C = x->cols, T = x->rows, H = K / 2;
    Node *o = raw(T, C, x->needs_grad || w->needs_grad);
    for (int t = 0; t < T; ++t)
      for (int c = 0; c < C; ++c) {
        S s = 0;
        for (int k = 0; k < K; ++k) {
          int tt = t + k - H;
          if (tt >= 0 && tt < T) s += w->v(k, c) * x->v(tt, c);
        }
        o->v(t, c) = s;
      }
    if (o->needs_grad)
      o->back = [x, w, o, K, H] {
        const int T = x->rows, C = x->cols;
        for (int t = 0; t < T; ++t)
          for (int c = 0; c < C; ++c) {
            S d = o->grad[size_t(t) * C + c];
            for (int k = 0; k < K; ++k) {
              int tt = t + k - H;
              if (tt < 0 || tt >= T) continue;
              if (x->needs_grad) x->grad[size_t(tt) * C + c] += d * w->v(k, c);
              if (w->needs_grad) w->grad[size_t(k) * C + c] += d * x->v(tt, c);
            }
          }
      };
    return o;
  }

  Node *select(Node *x, int r, int c) {
    if (r < 0 || r >= x->rows || c < 0 || c >= x->cols) throw ShapeError("select: out of range");
    Node *o = raw(1, 1, x->needs_grad);
    o->val[0] = x->v(r, c);
    if (o->needs_grad)
      o->back = [x, o, r, c] { x->grad[size_t(r) * x->cols + c] += o->grad[0]; };
    return o;
  }

  Node *sum(Node *x) {
    Node *o = raw(1, 1, x->needs_grad);
    S s = 0;
    for (S v : x->val) s += v;
    o->val[0] = s;
    if (o->needs_grad)
      o->back = [x, o] {
        for (size_t i = 0; i < x->grad.size(); ++i) x->grad[i] += o->grad[0];
      };
    return o;
  }

  // Weighted negative log likelihood: sum_t w_t * (-logp[t][targets[t]]).
  Node *nll(Node *logp, const std::vector<uint16_t> &targets, const std::vector<S> &weights) {
    if (int(targets.size()) != logp->rows || weights.size() != targets.size())
      throw ShapeError("nll: target/weight count mismatch");
    for (uint16_t z : targets)
      if (z >= logp->cols) throw ParamError("nll: target id out of vocabulary");
    Node *o = raw(1, 1, logp->needs_grad);
    S s = 0;
    for (int t = 0; t < logp->rows; ++t) s -= weights[size_t(t)] * logp->v(t, targets[size_t(t)]);
    o->val[0] = s;
    if (o->needs_grad) {
      std::vector<uint16_t> tg = targets;
      std::vector<S> wt = weights;
      o->back = [logp, o, tg = std::move(tg), wt = std::move(wt)] {
        for (int t = 0; t < logp->rows; ++t)
          logp->grad[size_t(t) * logp->cols + tg[size_t(t)]] -= o->grad[0] * wt[size_t(t)];
      };
    }
    return o;
  }

  // ---- backward ----

  void backward(Node *loss) {
    if (loss->rows != 1 || loss->cols != 1) throw ParamError("backward: loss must be scalar");
    if (!loss->needs_grad) throw ParamError("backward: loss does not reach any tracked tensor");
    if (backward_done_) throw ParamError("backward: tape already swept; build a fresh tape");
    backward_done_ = true;
    loss->grad[0] = S(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
      if (it->needs_grad && it->back) it->back();
  }

 private:
  std::deque<Node> nodes_;
  bool backward_done_ = false;
};

using Tape32 = TapeT<float>;
using Tape64 = TapeT<double>;

}  // namespace avlearn

#endif  // AVLEARN_NN_TENSOR_HPP
