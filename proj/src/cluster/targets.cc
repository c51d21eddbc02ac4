// cluster/targets.cc

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

#include "cluster/targets.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "util/binio.hpp"
#include "util/rng.hpp"

namespace avlearn {

TargetResult make_targets(const std::vector<FeatureSequence> &features,
                          const std::vector<int> &expected_T, const TargetOptions &opt,
                          uint64_t seed, const std::string &source_desc) {
  if (features.empty()) throw ParamError("make_targets: no features");
  if (features.size() != expected_T.size())
    throw ParamError("make_targets: expected_T size mismatch");
  const int rate = features[0].rate;
  const int D = features[0].data.cols;
  for (const auto &f : features)
    if (f.rate != rate || f.data.cols != D)
      throw ParamError("make_targets: inconsistent feature rate or dimension");

  // Standardized working copies.
  std::vector<Mat> work;
  work.reserve(features.size());
  for (const auto &f : features) work.push_back(f.data);
  if (opt.standardize) {
    std::vector<const Mat *> ptrs;
    for (const auto &m : work) ptrs.push_back(&m);
    ColumnStats stats = compute_column_stats(ptrs);
    for (auto &m : work) standardize_columns(m, stats);
  }

  size_t total = 0;
  for (const auto &m : work) total += size_t(m.rows);

  // Subsample frames for fitting (uniform without replacement).
  Mat fit_data;
  if (total <= opt.fit_cap) {
    fit_data = Mat(int(total), D);
    int r = 0;
    for (const auto &m : work)
      for (int t = 0; t < m.rows; ++t) std::copy_n(m.row(t), D, fit_data.row(r++));
  } else {
    std::vector<size_t> all(total);
    std::iota(all.begin(), all.end(), size_t(0));
    auto rng = make_rng(seed, "target-subsample");
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(opt.fit_cap);
    std::sort(all.begin(), all.end());

    // Map flat frame index -> (utterance, row).
    fit_data = Mat(int(opt.fit_cap), D);
    size_t base = 0, ui = 0;
    int r = 0;
    for (size_t flat : all) {
      while (flat >= base + size_t(work[ui].rows)) base += size_t(work[ui++].rows);
      std::copy_n(work[ui].row(int(flat - base)), D, fit_data.row(r++));
    }
  }

  TargetResult out;
  out.codebook = kmeans_fit(fit_data, opt.K, opt.kmeans, seed);
  out.codebook.feature_kind = features[0].kind;
  out.targets.K = opt.K;
  out.targets.source = source_desc;

  for (size_t i = 0; i < work.size(); ++i) {
    std::vector<uint16_t> z = assign(work[i], out.codebook);
    if (rate == 100) {
      // Pad the 100 Hz stream so majority alignment yields exactly T frames.
      while (int(z.size()) < 4 * expected_T[i]) z.push_back(z.back());
      z = align_labels_25hz(z);
      z.resize(size_t(expected_T[i]));
    } else {
      while (int(z.size()) < expected_T[i]) z.push_back(z.back());
      z.resize(size_t(expected_T[i]));
    }
    out.targets.z.push_back(std::move(z));
  }
  return out;
}

void save_targets(const ClusterTargets &t, const std::string &path) {
  BinWriter w(path);
  w.magic("AVT1");
  w.u32(uint32_t(t.K));
  w.str(t.source);
  w.u32(uint32_t(t.z.size()));
  for (size_t i = 0; i < t.z.size(); ++i) {
    w.u32(uint32_t(i));
    w.u32(uint32_t(t.z[i].size()));
    w.u16v(t.z[i]);
  }
  w.close();
}

ClusterTargets load_targets(const std::string &path) {
  BinReader r(path);
  r.expect_magic("AVT1");
  ClusterTargets t;
  t.K = int(r.u32());
  t.source = r.str();
  uint32_t n = r.u32();
  for (uint32_t i = 0; i < n; ++i) {
    uint32_t id = r.u32();
    if (id != i) throw FormatError("targets file out of order: " + path);
    uint32_t T = r.u32();
    t.z.push_back(r.u16v(T));
  }
  return t;
}

}  // namespace avlearn
