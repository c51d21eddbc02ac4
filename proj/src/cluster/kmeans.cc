// cluster/kmeans.cc

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

#include "cluster/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "util/binio.hpp"
#include "util/rng.hpp"

namespace avlearn {

namespace {

double sqdist(const float *a, const float *b, int D) {
  double s = 0.0;
  for (int j = 0; j < D; ++j) {
    double d = double(a[j]) - double(b[j]);
    s += d * d;
  }
  return s;
}

// Squared distance of every point to its nearest centroid.
void nearest(const Mat &X, const Mat &C, std::vector<int> &idx, std::vector<double> &dist) {
  const int N = X.rows, K = C.rows, D = X.cols;
  idx.resize(size_t(N));
  dist.resize(size_t(N));
  for (int i = 0; i < N; ++i) {
    int best = 0;
    double bd = std::numeric_limits<double>::max();
    for (int k = 0; k < K; ++k) {
      double d = sqdist(X.row(i), C.row(k), D);
      if (d < bd) {
        bd = d;
        best = k;
      }
    }
    idx[size_t(i)] = best;
    dist[size_t(i)] = bd;
  }
}

Mat seed_plus_plus(const Mat &X, int K, std::mt19937_64 &rng) {
  const int N = X.rows, D = X.cols;
  Mat C(K, D);
  std::uniform_int_distribution<int> first(0, N - 1);
  std::copy_n(X.row(first(rng)), D, C.row(0));

  std::vector<double> d2(static_cast<size_t>(N));
  for (int i = 0; i < N; ++i) d2[size_t(i)] = sqdist(X.row(i), C.row(0), D);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 1; k < K; ++k) {
    double total = 0.0;
    for (double d : d2) total += d;
    int pick = 0;
    if (total > 0.0) {
      double r = unit(rng) * total, acc = 0.0;
      for (int i = 0; i < N; ++i) {
        acc += d2[size_t(i)];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = first(rng);  // all points coincide with chosen centers
    }
    std::copy_n(X.row(pick), D, C.row(k));
    for (int i = 0; i < N; ++i)
      d2[size_t(i)] = std::min(d2[size_t(i)], sqdist(X.row(i), C.row(k), D));
  }
  return C;
}

struct LloydResult {
  Mat centroids;
  double inertia = 0.0;
};

LloydResult lloyd(const Mat &X, int K, int max_iter, std::mt19937_64 &rng) {
  const int N = X.rows, D = X.cols;
  Mat C = seed_plus_plus(X, K, rng);

  std::vector<int> idx;
  std::vector<double> dist;
  double prev = std::numeric_limits<double>::max();
  for (int it = 0; it < max_iter; ++it) {
    nearest(X, C, idx, dist);
    double inertia = 0.0;
    for (double d : dist) inertia += d;
    // Objective monotonicity is an invariant of Lloyd; allow fp slack.
    if (inertia > prev * (1.0 + 1e-9) + 1e-9)
      throw Error("kmeans: objective increased across an iteration");
    bool converged = (prev - inertia) <= 1e-12 * std::max(1.0, prev);
    prev = inertia;

    std::vector<double> acc(size_t(K) * D, 0.0);
    std::vector<int> count(size_t(K), 0);
    for (int i = 0; i < N; ++i) {
      const float *x = X.row(i);
      double *a = acc.data() + size_t(idx[size_t(i)]) * D;
      for (int j = 0; j < D; ++j) a[j] += x[j];
      ++count[size_t(idx[size_t(i)])];
    }
    for (int k = 0; k < K; ++k) {
      if (count[size_t(k)] == 0) {
        // Repair: move the centroid to the point farthest from its center.
        int far = int(std::max_element(dist.begin(), dist.end()) - dist.begin());
        std::copy_n(X.row(far), D, C.row(k));
        dist[size_t(far)] = 0.0;
        converged = false;
      } else {
        for (int j = 0; j < D; ++j)
          C.at(k, j) = float(acc[size_t(k) * D + j] / count[size_t(k)]);
      }
    }
    if (converged) break;
  }
  nearest(X, C, idx, dist);
  double inertia = 0.0;
  for (double d : dist) inertia += d;
  return {std::move(C), inertia};
}

}  // namespace

Codebook kmeans_fit(const Mat &X, int K, const KmeansOptions &opt, uint64_t seed) {
  if (K < 1) throw ParamError("kmeans_fit: K must be >= 1");
  if (X.rows < K) throw ParamError("kmeans_fit: fewer points than clusters");
  for (float v : X.d)
    if (!std::isfinite(v)) throw ParamError("kmeans_fit: non-finite input");

  LloydResult best;
  best.inertia = std::numeric_limits<double>::max();
  for (int r = 0; r < opt.n_restarts; ++r) {
    auto rng = make_rng(seed, "kmeans-restart", uint64_t(r));
    LloydResult res = lloyd(X, K, opt.max_iter, rng);
    if (res.inertia < best.inertia) best = std::move(res);
  }

  Codebook cb;
  cb.centroids = std::move(best.centroids);
  cb.K = K;
  cb.fit_seed = seed;
  cb.inertia = best.inertia;
  return cb;
}

std::vector<uint16_t> assign(const Mat &X, const Codebook &cb) {
  if (X.cols != cb.centroids.cols)
    throw ParamError("assign: dimension mismatch (" + std::to_string(X.cols) + " vs " +
                     std::to_string(cb.centroids.cols) + ")");
  std::vector<int> idx;
  std::vector<double> dist;
  nearest(X, cb.centroids, idx, dist);
  std::vector<uint16_t> out(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) out[i] = uint16_t(idx[i]);
  return out;
}

void save_codebook(const Codebook &cb, const std::string &path) {
  BinWriter w(path);
  w.magic("AVK1");
  w.u32(uint32_t(cb.K));
  w.u32(uint32_t(cb.centroids.cols));
  w.u16(uint16_t(cb.feature_kind));
  w.u64(cb.fit_seed);
  w.f32(float(cb.inertia));
  w.f32v(cb.centroids.d);
  w.close();
}

Codebook load_codebook(const std::string &path) {
  BinReader r(path);
  r.expect_magic("AVK1");
  Codebook cb;
  cb.K = int(r.u32());
  int D = int(r.u32());
  cb.feature_kind = FeatureKind(r.u16());
  cb.fit_seed = r.u64();
  cb.inertia = r.f32();
  cb.centroids = Mat(cb.K, D);
  cb.centroids.d = r.f32v(size_t(cb.K) * D);
  return cb;
}

}  // namespace avlearn
