// cluster/metrics.hpp

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

#ifndef AVLEARN_CLUSTER_METRICS_HPP
#define AVLEARN_CLUSTER_METRICS_HPP

#include <cstdint>
#include <vector>

namespace avlearn {

// Fraction of frames landing in their cluster's majority class.
double purity(const std::vector<uint16_t> &z, const std::vector<uint16_t> &labels);

// 2 I(Z;C) / (H(Z) + H(C)) with natural logs over the empirical joint.
// Both-constant identical partitions give 1; a single constant partition
// gives 0 (I = 0).
double nmi(const std::vector<uint16_t> &z, const std::vector<uint16_t> &labels);

}  // namespace avlearn

#endif  // AVLEARN_CLUSTER_METRICS_HPP
