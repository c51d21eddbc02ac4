// cluster/metrics.cc

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

#include "cluster/metrics.hpp"

#include <cmath>
#include <map>

#include "util/common.hpp"

namespace avlearn {

namespace {

// Contingency counts over (cluster, class) pairs.
std::map<std::pair<uint16_t, uint16_t>, size_t> contingency(const std::vector<uint16_t> &z,
                                                            const std::vector<uint16_t> &labels) {
  if (z.empty() || z.size() != labels.size())
    throw ParamError("cluster metrics: empty or mismatched inputs");
  std::map<std::pair<uint16_t, uint16_t>, size_t> joint;
  for (size_t i = 0; i < z.size(); ++i) ++joint[{z[i], labels[i]}];
  return joint;
}

}  // namespace

double purity(const std::vector<uint16_t> &z, const std::vector<uint16_t> &labels) {
  auto joint = contingency(z, labels);
  std::map<uint16_t, size_t> best;  // cluster -> majority class count
  for (const auto &[zc, n] : joint) {
    auto &b = best[zc.first];
    if (n > b) b = n;
  }
  size_t correct = 0;
  for (const auto &[k, n] : best) correct += n;
  return double(correct) / double(z.size());
}

double nmi(const std::vector<uint16_t> &z, const std::vector<uint16_t> &labels) {
  auto joint = contingency(z, labels);
  const double N = double(z.size());

  std::map<uint16_t, size_t> nz, nc;
  for (const auto &[zc, n] : joint) {
    nz[zc.first] += n;
    nc[zc.second] += n;
  }
  auto entropy = [N](const std::map<uint16_t, size_t> &m) {
    double h = 0.0;
    for (const auto &[k, n] : m) {
      double p = double(n) / N;
      h -= p * std::log(p);
    }
    return h;
  };
  double hz = entropy(nz), hc = entropy(nc);
  if (hz + hc == 0.0) return 1.0;  // both partitions constant, hence identical

  double mi = 0.0;
  for (const auto &[zc, n] : joint) {
    double pj = double(n) / N;
    double pz = double(nz[zc.first]) / N;
    double pc = double(nc[zc.second]) / N;
    mi += pj * std::log(pj / (pz * pc));
  }
  return 2.0 * mi / (hz + hc);
}

}  // namespace avlearn
