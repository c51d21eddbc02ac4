// cluster/targets.hpp

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

#ifndef AVLEARN_CLUSTER_TARGETS_HPP
#define AVLEARN_CLUSTER_TARGETS_HPP

#include <string>
#include <vector>

#include "cluster/kmeans.hpp"

namespace avlearn {

// Per-utterance discrete target sequences at 25 Hz.
struct ClusterTargets {
  int K = 0;
  std::vector<std::vector<uint16_t>> z;  // indexed like the utterance list
  std::string source;                    // e.g. "mfcc", "model-iter1-layer3"
};

struct TargetOptions {
  int K = 20;
  KmeansOptions kmeans;
  size_t fit_cap = 200000;  // max frames used for fitting
  bool standardize = true;  // per-corpus zero mean, unit variance before k-means
};

// Fits a codebook on (subsampled, optionally standardized) features and
// assigns every frame. 100 Hz inputs (MFCC) are assigned per 100 Hz frame and
// majority-aligned to 25 Hz; each utterance's target length is forced to
// exactly expected_T by padding the assignment stream before alignment.
struct TargetResult {
  ClusterTargets targets;
  Codebook codebook;
};

TargetResult make_targets(const std::vector<FeatureSequence> &features,
                          const std::vector<int> &expected_T, const TargetOptions &opt,
                          uint64_t seed, const std::string &source_desc);

void save_targets(const ClusterTargets &t, const std::string &path);
ClusterTargets load_targets(const std::string &path);

}  // namespace avlearn

#endif  // AVLEARN_CLUSTER_TARGETS_HPP
