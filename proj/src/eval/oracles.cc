// eval/oracles.cc

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

#include "eval/oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <set>

#include "cluster/kmeans.hpp"
#include "cluster/metrics.hpp"
#include "decode/decode.hpp"
#include "mask/masking.hpp"
#include "model/avhubert.hpp"
#include "util/rng.hpp"

namespace avlearn {

namespace {

std::string fmt(const char *f, double a, double b = 0, double c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Mat random_mat(int r, int c, std::mt19937_64 &rng, double scale = 1.0) {
  Mat m(r, c);
  std::normal_distribution<double> d(0.0, scale);
  for (float &v : m.d) v = float(d(rng));
  return m;
}

// Row-wise log softmax computed independently of the production tape op.
std::vector<std::vector<double>> to_logprobs(const Mat &logits) {
  std::vector<std::vector<double>> out(size_t(logits.rows),
                                       std::vector<double>(size_t(logits.cols)));
  for (int r = 0; r < logits.rows; ++r) {
    double mx = -1e300;
    for (int c = 0; c < logits.cols; ++c) mx = std::max(mx, double(logits.at(r, c)));
    double z = 0;
    for (int c = 0; c < logits.cols; ++c) z += std::exp(double(logits.at(r, c)) - mx);
    for (int c = 0; c < logits.cols; ++c)
      out[size_t(r)][size_t(c)] = double(logits.at(r, c)) - mx - std::log(z);
  }
  return out;
}

std::vector<uint16_t> collapse(const std::vector<int> &path, int blank) {
  std::vector<uint16_t> out;
  int prev = -1;
  for (int s : path) {
    if (s != prev && s != blank) out.push_back(uint16_t(s));
    prev = s;
  }
  return out;
}

// Sum of path probabilities per collapsed labeling, by full enumeration.
std::map<std::vector<uint16_t>, double> enumerate_labelings(
    const std::vector<std::vector<double>> &lp) {
  const int T = int(lp.size()), V = int(lp[0].size()), blank = V - 1;
  std::map<std::vector<uint16_t>, double> total;  // labeling -> prob (linear)
  std::vector<int> path(size_t(T), 0);
  while (true) {
    double logp = 0;
    for (int t = 0; t < T; ++t) logp += lp[size_t(t)][size_t(path[size_t(t)])];
    std::vector<uint16_t> lab = collapse(path, blank);
    total[lab] += std::exp(logp);
    int i = T - 1;
    while (i >= 0 && path[size_t(i)] == V - 1) path[size_t(i--)] = 0;
    if (i < 0) break;
    ++path[size_t(i)];
  }
  return total;
}

}  // namespace

// Criterion: analytic gradients of the masked-prediction loss and the CTC
// loss match central finite differences at f64 over every parameter.
OracleResult oracle_gradients(uint64_t seed) {
  OracleResult res{"gradient-check", false, ""};
  ModelConfig mc;
  mc.dim = 16;
  mc.layers = 2;
  mc.heads = 4;
  mc.ffn_dim = 32;
  mc.dropout = mc.attn_dropout = mc.layer_drop = 0.0;
  mc.codebook = 5;
  mc.alpha = 0.5;
  mc.image_size = 8;
  mc.visual_hidden = 8;

  const int T = 6;
  auto rng = make_rng(seed, "grad-data");
  Mat fa = random_mat(T, mc.audio_dim, rng);
  std::vector<Mat> frames;
  for (int i = 0; i < T; ++i) frames.push_back(random_mat(8, 8, rng, 0.3));
  std::vector<uint16_t> z;
  std::uniform_int_distribution<int> zd(0, mc.codebook - 1);
  for (int i = 0; i < T; ++i) z.push_back(uint16_t(zd(rng)));
  // Exercise all three mask embeddings at once.
  std::vector<uint8_t> aflags = {1, 0, 0, 1, 0, 0};
  std::vector<uint8_t> vflags = {0, 1, 0, 0, 1, 0};
  std::vector<uint8_t> fused = {0, 0, 1, 0, 0, 1};
  std::vector<uint8_t> uni(static_cast<size_t>(T));
  for (int i = 0; i < T; ++i) uni[size_t(i)] = uint8_t(aflags[i] | vflags[i] | fused[i]);
  std::vector<uint16_t> ctc_target = {0, 1, 0};

  AVHubert64 model(mc, mix_seed(seed, "grad-model"));
  model.attach_ctc_head(2, mix_seed(seed, "grad-ctc"));

  double worst = 0.0, worst_abs = 0.0;
  const double h = 1e-5;
  for (int which = 0; which < 2; ++which) {
    auto forward = [&](Tape64 *keep) -> double {
      Tape64 local;
      Tape64 &t = keep ? *keep : local;
      auto *a = model.encode_audio(t, fa, &aflags);
      auto *v = model.encode_visual(t, frames, &vflags);
      auto *x = model.fuse(t, a, v, FuseMode::Both);
      auto outs = model.transformer_blocks(t, x, &fused, false, nullptr);
      Tape64::Node *loss =
          which == 0 ? masked_loss(t, model.predict_clusters(t, outs.back()), z, uni, mc.alpha)
                     : ctc_loss(t, model.ctc_log_probs(t, outs.back()), ctc_target);
      if (keep) t.backward(loss);
      return loss->val[0];
    };

    for (auto *p : model.params()) p->zero_grad();
    Tape64 tape;
    forward(&tape);

    for (auto *p : model.params()) {
      for (size_t i = 0; i < p->size(); ++i) {
        double orig = p->value[i];
        auto central = [&](double step) {
          p->value[i] = orig + step;
          double up = forward(nullptr);
          p->value[i] = orig - step;
          double dn = forward(nullptr);
          p->value[i] = orig;
          return (up - dn) / (2 * step);
        };
        double numeric = central(h);
        double analytic = p->grad[i];
        // f64 central differences bottom out near eps*|loss|/h ~ 1e-10, so
        // essentially-zero gradients cannot be judged relatively; below the
        // absolute floor (still two orders above the noise, four below any
        // real gradient) the entry counts as exact.
        auto rel_err = [&](double n) {
          double diff = std::abs(analytic - n);
          if (diff < 1e-8) return 0.0;
          return diff / std::max(std::abs(analytic), std::abs(n));
        };
        double rel = rel_err(numeric);
        if (rel > 5e-5) {
          // Cancel the h^2 truncation term before judging the analytic value.
          double refined = (4.0 * central(h / 2) - numeric) / 3.0;
          rel = std::min(rel, rel_err(refined));
        }
        worst = std::max(worst, rel);
        worst_abs = std::max(worst_abs, std::abs(analytic - numeric));
      }
    }
  }
  res.pass = worst < 1e-4;
  res.detail = fmt("max relative error %.3e (tolerance 1e-4), max |diff| %.3e", worst, worst_abs);
  return res;
}

// Criterion: CTC loss equals -log of the exhaustively enumerated probability
// mass of the target labeling, 1000 random instances, T<=6, U<=3.
OracleResult oracle_ctc_enumeration(uint64_t seed) {
  OracleResult res{"ctc-enumeration", false, ""};
  auto rng = make_rng(seed, "ctc-enum");
  double worst = 0.0;
  for (int inst = 0; inst < 1000; ++inst) {
    std::uniform_int_distribution<int> td(1, 6), ud(1, 3);
    int T = td(rng), U = ud(rng);
    std::uniform_int_distribution<int> ld(1, U), tok(0, U - 1);
    std::vector<uint16_t> target;
    for (int tries = 0;; ++tries) {
      target.clear();
      int L = ld(rng);
      for (int i = 0; i < L; ++i) target.push_back(uint16_t(tok(rng)));
      if (ctc_min_frames(target) <= T) break;
      if (tries > 100) {
        target = {uint16_t(tok(rng))};
        break;
      }
    }
    Mat logits = random_mat(T, U + 1, rng, 2.0);
    auto lp = to_logprobs(logits);
    auto mass = enumerate_labelings(lp);
    auto it = mass.find(target);
    double expected = -std::log(it == mass.end() ? 0.0 : it->second);

    Tape64 t;
    std::vector<double> flat;
    for (auto &row : lp) flat.insert(flat.end(), row.begin(), row.end());
    Tape64::Node *lpn = t.input(T, U + 1, flat);
    double got = ctc_loss(t, lpn, target)->val[0];
    worst = std::max(worst, std::abs(got - expected));
  }
  res.pass = worst < 1e-6;
  res.detail = fmt("max |loss - enumeration| = %.3e over 1000 instances", worst);
  return res;
}

// Criterion: exhaustive-beam prefix search returns the brute-force best
// labeling on 500 random instances, T<=4, U<=2.
OracleResult oracle_beam_exhaustive(uint64_t seed) {
  OracleResult res{"beam-exhaustive", false, ""};
  auto rng = make_rng(seed, "beam");
  int mismatches = 0;
  double worst_gap = 0.0;
  for (int inst = 0; inst < 500; ++inst) {
    std::uniform_int_distribution<int> td(1, 4), ud(1, 2);
    int T = td(rng), U = ud(rng);
    Mat logits = random_mat(T, U + 1, rng, 2.0);
    auto lp = to_logprobs(logits);
    Mat logp_mat(T, U + 1);
    for (int r = 0; r < T; ++r)
      for (int c = 0; c <= U; ++c) logp_mat.at(r, c) = float(lp[size_t(r)][size_t(c)]);
    // Enumerate from the exact float values the beam will consume.
    std::vector<std::vector<double>> lpf(size_t(T), std::vector<double>(size_t(U + 1)));
    for (int r = 0; r < T; ++r)
      for (int c = 0; c <= U; ++c) lpf[size_t(r)][size_t(c)] = double(logp_mat.at(r, c));
    auto mass = enumerate_labelings(lpf);

    std::vector<uint16_t> best;
    double best_p = -1;
    for (const auto &[lab, p] : mass)
      if (p > best_p) {
        best_p = p;
        best = lab;
      }
    Hypothesis hyp = beam_decode(logp_mat, 1 << (2 * T));  // >= (U+1)^T
    if (hyp.tokens != best) {
      double hyp_p = mass.count(hyp.tokens) ? mass.at(hyp.tokens) : 0.0;
      double gap = std::abs(std::log(best_p) - std::log(hyp_p));
      worst_gap = std::max(worst_gap, gap);
      if (gap > 1e-9) ++mismatches;  // a genuine miss, not a tie
    }
  }
  res.pass = mismatches == 0;
  res.detail = fmt("%.0f true mismatches, worst tie gap %.3e", double(mismatches), worst_gap);
  return res;
}

// Criterion: purity and NMI match brute-force contingency computations on 200
// random partitions of <= 20 points.
OracleResult oracle_metrics_bruteforce(uint64_t seed) {
  OracleResult res{"metrics-bruteforce", false, ""};
  auto rng = make_rng(seed, "metrics");
  double worst = 0.0;
  for (int inst = 0; inst < 200; ++inst) {
    std::uniform_int_distribution<int> nd(1, 20), kd(0, 4);
    int n = nd(rng);
    std::vector<uint16_t> z, y;
    for (int i = 0; i < n; ++i) {
      z.push_back(uint16_t(kd(rng)));
      y.push_back(uint16_t(kd(rng)));
    }
    // Dense contingency table, direct definitions.
    double table[5][5] = {};
    double zc[5] = {}, yc[5] = {};
    for (int i = 0; i < n; ++i) {
      table[z[size_t(i)]][y[size_t(i)]] += 1;
      zc[z[size_t(i)]] += 1;
      yc[y[size_t(i)]] += 1;
    }
    double pur = 0;
    for (int a = 0; a < 5; ++a) {
      double mx = 0;
      for (int b = 0; b < 5; ++b) mx = std::max(mx, table[a][b]);
      pur += mx;
    }
    pur /= n;
    double hz = 0, hy = 0, mi = 0;
    for (int a = 0; a < 5; ++a) {
      if (zc[a] > 0) hz -= zc[a] / n * std::log(zc[a] / n);
      if (yc[a] > 0) hy -= yc[a] / n * std::log(yc[a] / n);
    }
    for (int a = 0; a < 5; ++a)
      for (int b = 0; b < 5; ++b)
        if (table[a][b] > 0)
          mi += table[a][b] / n * std::log(table[a][b] * n / (zc[a] * yc[b]));
    double expected_nmi = (hz + hy) == 0 ? 1.0 : 2 * mi / (hz + hy);

    worst = std::max(worst, std::abs(purity(z, y) - pur));
    worst = std::max(worst, std::abs(nmi(z, y) - expected_nmi));
  }
  res.pass = worst < 1e-12;
  res.detail = fmt("max |metric - bruteforce| = %.3e over 200 partitions", worst);
  return res;
}

// Criterion: Lloyd objective never increases (the fitter self-checks each
// sweep and aborts on violation) across 100 random problems, and the 1-D
// {0,1,10,11} K=2 problem yields centroids {0.5, 10.5} exactly.
OracleResult oracle_kmeans(uint64_t seed) {
  OracleResult res{"kmeans-monotone", false, ""};
  auto rng = make_rng(seed, "kmeans");
  for (int inst = 0; inst < 100; ++inst) {
    std::uniform_int_distribution<int> kd(2, 5), dd(1, 4);
    int K = kd(rng), D = dd(rng);
    std::uniform_int_distribution<int> nd(K, 60);
    int N = nd(rng);
    Mat X = random_mat(N, D, rng, 3.0);
    KmeansOptions opt;
    opt.n_restarts = 2;
    try {
      Codebook cb = kmeans_fit(X, K, opt, mix_seed(seed, "fit", uint64_t(inst)));
      if (!std::isfinite(cb.inertia) || cb.inertia < 0) {
        res.detail = fmt("bad inertia %.3e at instance %.0f", cb.inertia, double(inst));
        return res;
      }
    } catch (const Error &e) {
      res.detail = std::string("objective increased: ") + e.what();
      return res;
    }
  }
  Mat X(4, 1);
  X.d = {0.0f, 1.0f, 10.0f, 11.0f};
  Codebook cb = kmeans_fit(X, 2, {}, mix_seed(seed, "exact"));
  std::vector<float> c = {cb.centroids.at(0, 0), cb.centroids.at(1, 0)};
  std::sort(c.begin(), c.end());
  if (c[0] != 0.5f || c[1] != 10.5f) {
    res.detail = fmt("1-D case centroids {%g, %g}, want {0.5, 10.5}", c[0], c[1]);
    return res;
  }
  res.pass = true;
  res.detail = "100 random problems monotone; 1-D exact case reproduced";
  return res;
}

// Criterion: substitution worked example exact; same-sequence offset domain
// for span (4,6) with T_f=10 is [0,2] u [6,8]; unmasked frames bit-identical.
OracleResult oracle_masking_examples(uint64_t seed) {
  OracleResult res{"masking-examples", false, ""};
  const int T = 5, px = 4;
  std::vector<Mat> frames, imposter;
  for (int i = 0; i < T; ++i) {
    Mat f(px, px), g(px, px);
    std::fill(f.d.begin(), f.d.end(), float(i + 1));
    std::fill(g.d.begin(), g.d.end(), float(100 + i));
    frames.push_back(f);
    imposter.push_back(g);
  }
  MaskPlan plan;
  plan.spans = {{1, 3}};
  plan.modality = MaskModality::Visual;
  plan.offsets = {0};
  plan.imposter_len = T;
  plan.T = T;
  CorruptedVisual cv = corrupt_visual(frames, plan, imposter, CorruptMode::SubSameSeg,
                                      mix_seed(seed, "corrupt"));
  if (!(cv.frames[1] == imposter[0] && cv.frames[2] == imposter[1])) {
    res.detail = "span (1,3) offset 0 did not copy imposter frames 0,1";
    return res;
  }
  for (int i : {0, 3, 4})
    if (!(cv.frames[size_t(i)] == frames[size_t(i)])) {
      res.detail = "unmasked frame " + std::to_string(i) + " modified";
      return res;
    }

  const std::set<int> domain = {0, 1, 2, 6, 7, 8};
  std::set<int> observed;
  for (uint64_t s = 0; s < 300; ++s) {
    MaskPlan p2;
    p2.spans = {{4, 6}};
    p2.modality = MaskModality::Visual;
    p2.T = 10;
    sample_offsets(p2, 10, true, mix_seed(seed, "dom", s));
    if (!domain.count(p2.offsets[0])) {
      res.detail = "offset " + std::to_string(p2.offsets[0]) + " outside [0,2] u [6,8]";
      return res;
    }
    observed.insert(p2.offsets[0]);
  }
  if (observed != domain) {
    res.detail = "offset domain not fully reachable (saw " +
                 std::to_string(observed.size()) + "/6 values in 300 draws)";
    return res;
  }
  res.pass = true;
  res.detail = "substitution example exact; offset domain [0,2] u [6,8] verified";
  return res;
}

// Criterion: branch frequencies at p_m=p_a=0.5 are (0.50, 0.25, 0.25)+-0.02
// over 10^4 sequence-level draws.
OracleResult oracle_dropout_frequencies(uint64_t seed) {
  OracleResult res{"dropout-frequencies", false, ""};
  ModelConfig mc;
  mc.dim = 8;
  mc.layers = 0;
  mc.heads = 2;
  mc.visual_hidden = 4;
  mc.image_size = 8;
  mc.codebook = 2;
  AVHubert32 model(mc, mix_seed(seed, "freq-model"));
  auto rng = make_rng(seed, "freq-draws");
  std::array<int, 3> counts = {0, 0, 0};
  const int N = 10000;
  for (int i = 0; i < N; ++i) {
    FuseMode m = model.sample_branch(rng);
    counts[size_t(m == FuseMode::Both ? 0 : m == FuseMode::AudioOnly ? 1 : 2)]++;
  }
  double fb = double(counts[0]) / N, fa = double(counts[1]) / N, fv = double(counts[2]) / N;
  res.pass = std::abs(fb - 0.50) < 0.02 && std::abs(fa - 0.25) < 0.02 &&
             std::abs(fv - 0.25) < 0.02;
  res.detail = fmt("branch frequencies (%.3f, %.3f, %.3f), want (0.50, 0.25, 0.25)+-0.02",
                   fb, fa, fv);
  return res;
}

// Criterion: realized masked fraction for (p=0.08, l=10) within +-0.01 of
// 1-(1-p)^l over 10^5 frames.
OracleResult oracle_span_coverage(uint64_t seed) {
  OracleResult res{"span-coverage", false, ""};
  const int T = 100000;
  MaskPlan plan = sample_spans(T, 0.08, 10, MaskModality::Fused, mix_seed(seed, "coverage"));
  double frac = double(plan.masked_frames()) / T;
  double expected = 1.0 - std::pow(0.92, 10);
  res.pass = std::abs(frac - expected) < 0.01;
  res.detail = fmt("masked fraction %.4f vs analytic %.4f (+-0.01)", frac, expected);
  return res;
}

std::vector<OracleResult> run_all_oracles(uint64_t seed) {
  return {oracle_gradients(mix_seed(seed, "o1")),
          oracle_ctc_enumeration(mix_seed(seed, "o2")),
          oracle_beam_exhaustive(mix_seed(seed, "o3")),
          oracle_metrics_bruteforce(mix_seed(seed, "o4")),
          oracle_kmeans(mix_seed(seed, "o5")),
          oracle_masking_examples(mix_seed(seed, "o6")),
          oracle_dropout_frequencies(mix_seed(seed, "o7")),
          oracle_span_coverage(mix_seed(seed, "o8"))};
}

}  // namespace avlearn
