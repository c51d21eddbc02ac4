// cluster/kmeans.hpp

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

#ifndef AVLEARN_CLUSTER_KMEANS_HPP
#define AVLEARN_CLUSTER_KMEANS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "feat/features.hpp"
#include "util/common.hpp"

namespace avlearn {

struct Codebook {
  Mat centroids;  // [K x D]
  int K = 0;
  FeatureKind feature_kind = FeatureKind::Mfcc39;
  uint64_t fit_seed = 0;
  double inertia = 0.0;
};

struct KmeansOptions {
  int max_iter = 50;
  int n_restarts = 3;
};

// Lloyd's algorithm with k-means++ seeding; the restart with the lowest
// inertia wins (ties by restart index). Empty clusters are repaired by
// stealing the point farthest from its centroid.
Codebook kmeans_fit(const Mat &X, int K, const KmeansOptions &opt, uint64_t seed);

// Nearest centroid by squared Euclidean distance, ties to the lowest index.
std::vector<uint16_t> assign(const Mat &X, const Codebook &cb);

void save_codebook(const Codebook &cb, const std::string &path);
Codebook load_codebook(const std::string &path);

}  // namespace avlearn

#endif  // AVLEARN_CLUSTER_KMEANS_HPP
