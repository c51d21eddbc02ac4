// tests/test_tensor.cc

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <random>

#include "nn/optim.hpp"
#include "nn/tensor.hpp"

using namespace avlearn;

namespace {

// Central finite differences over every entry of every parameter: the
// independent oracle for each primitive's analytic gradient.
double max_rel_err(std::vector<ParamT<double> *> params,
                   const std::function<double(Tape64 &)> &loss_fn) {
  // Analytic pass.
  for (auto *p : params) p->zero_grad();
  {
    Tape64 t;
    loss_fn(t);  // loss_fn builds the graph and calls backward internally
  }
  // Snapshot the analytic gradients: the FD evaluations below also run
  // backward sweeps, which would keep accumulating into p->grad.
  std::vector<std::vector<double>> analytic;
  for (auto *p : params) analytic.push_back(p->grad);
  const double h = 1e-5;
  double worst = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto *p = params[pi];
    for (size_t i = 0; i < p->size(); ++i) {
      const double keep = p->value[i];
      p->value[i] = keep + h;
      Tape64 tp;
      double fp = loss_fn(tp);
      p->value[i] = keep - h;
      Tape64 tm;
      double fm = loss_fn(tm);
      p->value[i] = keep;
      double numeric = (fp - fm) / (2.0 * h);
      double diff = std::abs(analytic[pi][i] - numeric);
      if (diff < 1e-10) continue;  // below finite-difference noise
      double denom = std::max(std::abs(analytic[pi][i]), std::abs(numeric));
      worst = std::max(worst, denom > 0 ? diff / denom : diff);
    }
  }
  return worst;
}

ParamT<double> random_param(const std::string &name, int r, int c, uint64_t seed) {
  ParamT<double> p(name, r, c);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  for (double &v : p.value) v = g(rng);
  return p;
}

}  // namespace

TEST_CASE("softmax rows of zeros are uniform and rows always sum to one") {
  Tape64 t;
  auto *x = t.input(2, 4, std::vector<double>{0, 0, 0, 0, 1, -3, 0.5, 2});
  auto *s = t.softmax_rows(x);
  for (int c = 0; c < 4; ++c) CHECK(s->v(0, c) == doctest::Approx(0.25));
  for (int r = 0; r < 2; ++r) {
    double z = 0;
    for (int c = 0; c < 4; ++c) z += s->v(r, c);
    CHECK(z == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("layernorm of a constant row is zero pre-affine") {
  Tape64 t;
  auto *x = t.input(1, 5, std::vector<double>{3, 3, 3, 3, 3});
  auto *y = t.layernorm_rows(x);
  for (int c = 0; c < 5; ++c) CHECK(std::abs(y->v(0, c)) < 1e-9);
}

TEST_CASE("simple analytic gradients: sum and dot") {
  ParamT<double> x = random_param("x", 1, 4, 1);
  {
    x.zero_grad();
    Tape64 t;
    auto *loss = t.sum(t.leaf(x));
    t.backward(loss);
    for (size_t i = 0; i < 4; ++i) CHECK(x.grad[i] == doctest::Approx(1.0));
  }
  {
    x.zero_grad();
    Tape64 t;
    auto *lx = t.leaf(x);
    auto *loss = t.sum(t.mul(lx, lx));
    t.backward(loss);
    for (size_t i = 0; i < 4; ++i) CHECK(x.grad[i] == doctest::Approx(2.0 * x.value[i]));
  }
}

TEST_CASE("matmul gradient matches finite differences") {
  ParamT<double> a = random_param("a", 3, 4, 2);
  ParamT<double> b = random_param("b", 4, 2, 3);
  for (bool ta : {false, true}) {
    for (bool tb : {false, true}) {
      ParamT<double> A = ta ? random_param("a", 4, 3, 2) : a;
      ParamT<double> B = tb ? random_param("b", 2, 4, 3) : b;
      double err = max_rel_err({&A, &B}, [&](Tape64 &t) {
        auto *o = t.matmul(t.leaf(A), t.leaf(B), ta, tb);
        auto *loss = t.sum(t.gelu(o));
        if (loss->needs_grad) t.backward(loss);
        return loss->val[0];
      });
      CHECK(err < 1e-5);
    }
  }
}

TEST_CASE("per-primitive gradients match finite differences") {
  ParamT<double> x = random_param("x", 4, 6, 7);
  ParamT<double> b = random_param("b", 1, 6, 8);

  auto check = [&](const std::function<Tape64::Node *(Tape64 &, Tape64::Node *, Tape64::Node *)> &op) {
    double err = max_rel_err({&x, &b}, [&](Tape64 &t) {
      auto *o = op(t, t.leaf(x), t.leaf(b));
      auto *loss = t.sum(o);
      if (loss->needs_grad) t.backward(loss);
      return loss->val[0];
    });
    CHECK(err < 1e-5);
  };

  check([](Tape64 &t, Tape64::Node *lx, Tape64::Node *lb) { return t.add_rowvec(lx, lb); });
  check([](Tape64 &t, Tape64::Node *lx, Tape64::Node *lb) { return t.mul_rowvec(lx, lb); });
  check([](Tape64 &t, Tape64::Node *lx, Tape64::Node *) { return t.relu(lx); });
  check([](Tape64 &t, Tape64::Node *lx, Tape64::Node *) { return t.gelu(lx); });
  check([](Tape64 &t, Tape64::Node *lx, Tape64::Node *) { return t.layernorm_rows(lx); });
  check([](Tape64 &t, Tape64::Node *lx, Tape64::Node *) {
    return t.mul(t.softmax_rows(lx), lx);  // weight the rows so the grad is nontrivial
  });
  check([](Tape64 &t, Tape64::Node *lx, Tape64::Node *) {
    return t.mul(t.log_softmax_rows(lx), lx);
  });
  check([](Tape64 &t, Tape64::Node *lx, Tape64::Node *) { return t.slice_cols(lx, 1, 4); });
  check([](Tape64 &t, Tape64::Node *lx, Tape64::Node *lb) {
    return t.concat_cols(lx, t.mul_rowvec(lx, lb));
  });
  check([](Tape64 &t, Tape64::Node *lx, Tape64::Node *) { return t.scale(lx, 0.37); });
}

TEST_CASE("depthwise temporal convolution gradient matches finite differences") {
  ParamT<double> x = random_param("x", 6, 3, 11);
  ParamT<double> w = random_param("w", 5, 3, 12);
  double err = max_rel_err({&x, &w}, [&](Tape64 &t) {
    auto *o = t.depthwise_conv_time(t.leaf(x), t.leaf(w));
    auto *loss = t.sum(t.gelu(o));
    if (loss->needs_grad) t.backward(loss);
    return loss->val[0];
  });
  CHECK(err < 1e-5);
}

TEST_CASE("nll gradient matches finite differences") {
  ParamT<double> x = random_param("x", 5, 4, 13);
  std::vector<uint16_t> targets{0, 3, 1, 1, 2};
  std::vector<double> weights{1.0, 0.5, 0.0, 1.0, 2.0};
  double err = max_rel_err({&x}, [&](Tape64 &t) {
    auto *lp = t.log_softmax_rows(t.leaf(x));
    auto *loss = t.nll(lp, targets, weights);
    if (loss->needs_grad) t.backward(loss);
    return loss->val[0];
  });
  CHECK(err < 1e-5);
}

TEST_CASE("replace_rows routes gradients to the embedding on masked rows only") {
  ParamT<double> x = random_param("x", 4, 3, 14);
  ParamT<double> e = random_param("e", 1, 3, 15);
  std::vector<uint8_t> flags{0, 1, 0, 1};
  double err = max_rel_err({&x, &e}, [&](Tape64 &t) {
    auto *o = t.replace_rows(t.leaf(x), flags, t.leaf(e));
    auto *loss = t.sum(t.mul(o, o));
    if (loss->needs_grad) t.backward(loss);
    return loss->val[0];
  });
  CHECK(err < 1e-5);

  // Masked rows contribute nothing to x's gradient.
  x.zero_grad();
  e.zero_grad();
  Tape64 t;
  auto *o = t.replace_rows(t.leaf(x), flags, t.leaf(e));
  t.backward(t.sum(o));
  for (int c = 0; c < 3; ++c) {
    CHECK(x.grad[size_t(1) * 3 + c] == 0.0);
    CHECK(x.grad[size_t(3) * 3 + c] == 0.0);
    CHECK(e.grad[size_t(c)] == doctest::Approx(2.0));  // two masked rows
  }
}

TEST_CASE("dropout scales kept positions and blocks dropped gradients") {
  ParamT<double> x("x", 8, 8);
  std::fill(x.value.begin(), x.value.end(), 1.0);
  std::mt19937_64 rng(4);
  x.zero_grad();
  Tape64 t;
  auto *lx = t.leaf(x);
  auto *d = t.dropout(lx, 0.5, rng);
  t.backward(t.sum(d));
  int kept = 0;
  for (size_t i = 0; i < 64; ++i) {
    if (d->val[i] != 0.0) {
      CHECK(d->val[i] == doctest::Approx(2.0));  // inverted dropout scale
      CHECK(x.grad[i] == doctest::Approx(2.0));
      ++kept;
    } else {
      CHECK(x.grad[i] == 0.0);
    }
  }
  CHECK(kept > 10);
  CHECK(kept < 54);
  // p = 0 is the identity (same node).
  Tape64 t2;
  auto *y = t2.input(1, 2, std::vector<double>{1, 2});
  CHECK(t2.dropout(y, 0.0, rng) == y);
  CHECK_THROWS_AS(t2.dropout(y, 1.0, rng), ParamError);
}

TEST_CASE("double backward on one tape is rejected") {
  ParamT<double> x = random_param("x", 2, 2, 16);
  Tape64 t;
  auto *loss = t.sum(t.leaf(x));
  t.backward(loss);
  CHECK_THROWS_AS(t.backward(loss), ParamError);
}

TEST_CASE("non-scalar or untracked losses are rejected") {
  ParamT<double> x = random_param("x", 2, 2, 17);
  Tape64 t;
  auto *lx = t.leaf(x);
  CHECK_THROWS_AS(t.backward(lx), ParamError);  // not 1x1
  Tape64 t2;
  auto *c = t2.input(1, 1, std::vector<double>{3.0});
  CHECK_THROWS_AS(t2.backward(c), ParamError);  // no tracked parent
}

TEST_CASE("shape mismatches carry both shapes in the message") {
  Tape64 t;
  auto *a = t.zeros(2, 3);
  auto *b = t.zeros(3, 2);
  try {
    t.add(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError &e) {
    std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
    CHECK(msg.find("3x2") != std::string::npos);
  }
  CHECK_THROWS_AS(t.matmul(a, a), ShapeError);
  CHECK_THROWS_AS(t.slice_cols(a, 2, 1), ShapeError);
}

TEST_CASE("adam leaves parameters alone on zero gradients") {
  ParamT<float> p("p", 2, 2);
  std::fill(p.value.begin(), p.value.end(), 1.5f);
  p.zero_grad();
  std::vector<ParamT<float> *> ps{&p};
  AdamT<float> opt;
  opt.step(ps, 0.1);
  for (float v : p.value) CHECK(v == 1.5f);
}

TEST_CASE("one adam step on a scalar matches the hand-evaluated recurrence") {
  // g=1, step 1: m=0.1, v=0.001; mhat=1, vhat=1; update = -lr / (1 + eps).
  ParamT<float> p("p", 1, 1);
  p.value[0] = 0.0f;
  p.grad.assign(1, 1.0f);
  std::vector<ParamT<float> *> ps{&p};
  AdamT<float> opt;
  opt.step(ps, 0.01);
  CHECK(p.value[0] == doctest::Approx(-0.01 / (1.0 + 1e-8)).epsilon(1e-6));
}

TEST_CASE("adam is deterministic across identical runs") {
  auto run = [] {
    ParamT<float> p("p", 2, 3);
    for (size_t i = 0; i < p.size(); ++i) p.value[i] = float(i) * 0.1f;
    std::vector<ParamT<float> *> ps{&p};
    AdamT<float> opt;
    for (int s = 0; s < 20; ++s) {
      for (size_t i = 0; i < p.size(); ++i) p.grad[i] = p.value[i] - 1.0f;
      opt.step(ps, 0.05);
    }
    return p.value;
  };
  CHECK(run() == run());
}

TEST_CASE("learning-rate schedule: warmup peak and endpoints") {
  LrSchedule s{0.002, 1000, 0.08};
  CHECK(s.lr_at(0) == doctest::Approx(0.0));
  CHECK(s.lr_at(80) == doctest::Approx(0.002));
  CHECK(s.lr_at(1000) == doctest::Approx(0.0));
  CHECK(s.lr_at(40) == doctest::Approx(0.001));
  CHECK(s.lr_at(540) == doctest::Approx(0.001));  // halfway down the decay
  CHECK_THROWS_AS(s.lr_at(-1), ParamError);
  CHECK_THROWS_AS(s.lr_at(1001), ParamError);
  LrSchedule bad{0.0, 100, 0.1};
  CHECK_THROWS_AS(bad.lr_at(0), ParamError);
}
