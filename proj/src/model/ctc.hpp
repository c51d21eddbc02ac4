// model/ctc.hpp

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

#ifndef AVLEARN_MODEL_CTC_HPP
#define AVLEARN_MODEL_CTC_HPP

#include <limits>

#include "nn/tensor.hpp"

namespace avlearn {

constexpr double kLogZero = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Minimum frame count to emit `target` (blanks required between repeats).
inline int ctc_min_frames(const std::vector<uint16_t> &target) {
  int n = int(target.size());
  for (size_t i = 1; i < target.size(); ++i)
    if (target[i] == target[i - 1]) ++n;
  return n;
}

// CTC loss -log sum over alignments collapsing to `target`, via the log-space
// forward recursion on the blank-interleaved label sequence. Input rows must
// already be log-probabilities (log-softmax); the gradient is the standard
// alpha-beta occupancy, exact because path probability is linear in each
// log-probability entry.
//
// Blank symbol is the last column (index U = cols - 1).
template <typename S>
typename TapeT<S>::Node *ctc_loss(TapeT<S> &tape, typename TapeT<S>::Node *logp,
                                  const std::vector<uint16_t> &target) {
  using Node = typename TapeT<S>::Node;
  const int T = logp->rows;
  const int blank = logp->cols - 1;
  if (target.empty()) throw LossError("ctc_loss: empty target");
  for (uint16_t w : target)
    if (int(w) >= blank) throw ParamError("ctc_loss: token id out of vocabulary");
  if (T < ctc_min_frames(target))
    throw LossError("ctc_loss: target infeasible for " + std::to_string(T) + " frames");

  // Blank-interleaved labels: blank, w1, blank, w2, ..., blank.
  const int L = 2 * int(target.size()) + 1;
  std::vector<int> lab(size_t(L), blank);
  for (size_t i = 0; i < target.size(); ++i) lab[2 * i + 1] = target[i];
  auto can_skip = [&](int s) { return lab[size_t(s)] != blank && s >= 2 && lab[size_t(s)] != lab[size_t(s - 2)]; };

  auto y = [logp](int t, int s_lab) { return double(logp->val[size_t(t) * logp->cols + s_lab]); };

  std::vector<double> alpha(size_t(T) * L, kLogZero);
  alpha[0] = y(0, lab[0]);
  if (L > 1) alpha[1] = y(0, lab[1]);
  for (int t = 1; t < T; ++t) {
    for (int s = 0; s < L; ++s) {
      double a = alpha[size_t(t - 1) * L + s];
      if (s >= 1) a = log_add(a, alpha[size_t(t - 1) * L + s - 1]);
      if (can_skip(s)) a = log_add(a, alpha[size_t(t - 1) * L + s - 2]);
      alpha[size_t(t) * L + s] = a == kLogZero ? kLogZero : a + y(t, lab[size_t(s)]);
    }
  }
  double log_p = alpha[size_t(T - 1) * L + L - 1];
  if (L > 1) log_p = log_add(log_p, alpha[size_t(T - 1) * L + L - 2]);
  if (log_p == kLogZero) throw LossError("ctc_loss: zero total path probability");

  Node *o = tape.raw(1, 1, logp->needs_grad);
  o->val[0] = S(-log_p);
  if (o->needs_grad) {
    o->back = [logp, o, lab, alpha = std::move(alpha), log_p, T, L] {
      const int blank = logp->cols - 1;
      auto can_skip = [&lab, blank](int s) {
        return lab[size_t(s)] != blank && s >= 2 && lab[size_t(s)] != lab[size_t(s - 2)];
      };
      // Beta excludes the emission at t, so alpha + beta is the posterior.
      std::vector<double> beta(size_t(T) * L, kLogZero);
      beta[size_t(T - 1) * L + L - 1] = 0.0;
      if (L > 1) beta[size_t(T - 1) * L + L - 2] = 0.0;
      auto y = [logp](int t, int s_lab) { return double(logp->val[size_t(t) * logp->cols + s_lab]); };
      for (int t = T - 2; t >= 0; --t) {
        for (int s = 0; s < L; ++s) {
          double b = beta[size_t(t + 1) * L + s] == kLogZero
                         ? kLogZero
                         : beta[size_t(t + 1) * L + s] + y(t + 1, lab[size_t(s)]);
          if (s + 1 < L && beta[size_t(t + 1) * L + s + 1] != kLogZero)
            b = log_add(b, beta[size_t(t + 1) * L + s + 1] + y(t + 1, lab[size_t(s + 1)]));
          if (s + 2 < L && can_skip(s + 2) && beta[size_t(t + 1) * L + s + 2] != kLogZero)
            b = log_add(b, beta[size_t(t + 1) * L + s + 2] + y(t + 1, lab[size_t(s + 2)]));
          beta[size_t(t) * L + s] = b;
        }
      }
      const double dL = double(o->grad[0]);
      for (int t = 0; t < T; ++t) {
        for (int s = 0; s < L; ++s) {
          double g = alpha[size_t(t) * L + s];
          if (g == kLogZero || beta[size_t(t) * L + s] == kLogZero) continue;
          g += beta[size_t(t) * L + s];
          logp->grad[size_t(t) * logp->cols + lab[size_t(s)]] -= S(dL * std::exp(g - log_p));
        }
      }
    };
  }
  return o;
}

}  // namespace avlearn

#endif  // AVLEARN_MODEL_CTC_HPP
