// tests/test_masking.cc

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

#include <algorithm>
#include <set>

#include "json.hpp"
#include "mask/masking.hpp"
#include "util/rng.hpp"

using namespace avlearn;

static std::vector<Mat> const_frames(int T, float base) {
  std::vector<Mat> out;
  for (int t = 0; t < T; ++t) out.push_back(Mat(4, 4, base + float(t)));
  return out;
}

TEST_CASE("no starts means an empty plan; all starts merge to one span") {
  MaskPlan p0 = sample_spans(20, 0.0, 10, MaskModality::Fused, 1);
  CHECK(p0.spans.empty());
  CHECK(p0.masked_frames() == 0);

  MaskPlan p1 = sample_spans(20, 1.0, 1, MaskModality::Fused, 1);
  REQUIRE(p1.spans.size() == 1);
  CHECK(p1.spans[0].s == 0);
  CHECK(p1.spans[0].t == 20);
  CHECK(p1.masked_frames() == 20);
}

TEST_CASE("spans are sorted, disjoint and clipped; flags match membership") {
  for (uint64_t seed = 0; seed < 50; ++seed) {
    MaskPlan p = sample_spans(37, 0.15, 6, MaskModality::Visual, seed);
    for (size_t i = 0; i < p.spans.size(); ++i) {
      CHECK(p.spans[i].s >= 0);
      CHECK(p.spans[i].s < p.spans[i].t);
      CHECK(p.spans[i].t <= 37);
      // Merged spans are separated by at least one unmasked frame.
      if (i > 0) CHECK(p.spans[i].s > p.spans[i - 1].t);
    }
    std::vector<uint8_t> f = p.flags();
    REQUIRE(int(f.size()) == 37);
    int n = 0;
    for (int t = 0; t < 37; ++t) {
      bool in = false;
      for (const MaskSpan &s : p.spans) in = in || (t >= s.s && t < s.t);
      CHECK(bool(f[size_t(t)]) == in);
      n += in;
    }
    CHECK(n == p.masked_frames());
  }
}

TEST_CASE("sampling is deterministic per seed") {
  MaskPlan a = sample_spans(50, 0.1, 5, MaskModality::Audio, 77);
  MaskPlan b = sample_spans(50, 0.1, 5, MaskModality::Audio, 77);
  REQUIRE(a.spans.size() == b.spans.size());
  for (size_t i = 0; i < a.spans.size(); ++i) {
    CHECK(a.spans[i].s == b.spans[i].s);
    CHECK(a.spans[i].t == b.spans[i].t);
  }
}

TEST_CASE("cross-sequence offsets stay within the imposter window") {
  // Span (2,4), T_f=10: every offset must land in [0, 8].
  MaskPlan p;
  p.modality = MaskModality::Visual;
  p.T = 10;
  p.spans = {{2, 4}};
  std::set<int> seen;
  for (uint64_t s = 0; s < 400; ++s) {
    MaskPlan q = p;
    sample_offsets(q, 10, false, s);
    REQUIRE(q.offsets.size() == 1);
    CHECK(q.offsets[0] >= 0);
    CHECK(q.offsets[0] <= 8);
    seen.insert(q.offsets[0]);
  }
  // Uniform over 9 values: 400 draws hit all of them.
  CHECK(seen.size() == 9);
}

TEST_CASE("same-sequence offsets avoid the span itself") {
  // Span (4,6), T_f=10: valid offsets are [0,2] u [6,8].
  std::set<int> seen;
  for (uint64_t s = 0; s < 400; ++s) {
    MaskPlan q;
    q.modality = MaskModality::Visual;
    q.T = 10;
    q.spans = {{4, 6}};
    sample_offsets(q, 10, true, s);
    REQUIRE(q.offsets.size() == 1);
    int o = q.offsets[0];
    CHECK(((o >= 0 && o <= 2) || (o >= 6 && o <= 8)));
    seen.insert(o);
  }
  CHECK(seen == std::set<int>{0, 1, 2, 6, 7, 8});
}

TEST_CASE("whole-sequence same-sequence span has no imposter") {
  MaskPlan q;
  q.modality = MaskModality::Visual;
  q.T = 8;
  q.spans = {{0, 8}};
  CHECK_THROWS_AS(sample_offsets(q, 8, true, 0), MaskError);

  // With fallback allowed the span is recorded instead.
  MaskPlan r = q;
  sample_offsets(r, 8, true, 0, true);
  REQUIRE(r.fallback_spans.size() == 1);
  CHECK(r.fallback_spans[0] == 0);
}

TEST_CASE("substitution copies the imposter segment and nothing else") {
  std::vector<Mat> frames = const_frames(5, 0.0f);
  std::vector<Mat> imposter = const_frames(5, 100.0f);
  MaskPlan p;
  p.modality = MaskModality::Visual;
  p.T = 5;
  p.spans = {{1, 3}};
  p.offsets = {0};
  p.imposter_len = 5;
  CorruptedVisual cv = corrupt_visual(frames, p, imposter, CorruptMode::SubSameSeg, 0);
  REQUIRE(cv.frames.size() == 5);
  CHECK(cv.frames[1] == imposter[0]);
  CHECK(cv.frames[2] == imposter[1]);
  // Unmasked frames bit-identical.
  CHECK(cv.frames[0] == frames[0]);
  CHECK(cv.frames[3] == frames[3]);
  CHECK(cv.frames[4] == frames[4]);
  for (uint8_t f : cv.learned_flags) CHECK(f == 0);
}

TEST_CASE("sub-seg output over a span is exactly one contiguous imposter slice") {
  std::vector<Mat> frames = const_frames(12, 0.0f);
  std::vector<Mat> imposter = const_frames(12, 50.0f);
  MaskPlan p = sample_spans(12, 0.3, 3, MaskModality::Visual, 4);
  sample_offsets(p, 12, false, 9);
  CorruptedVisual cv = corrupt_visual(frames, p, imposter, CorruptMode::SubSameSeg, 0);
  for (size_t i = 0; i < p.spans.size(); ++i) {
    const MaskSpan &sp = p.spans[i];
    int matches = 0;
    for (int off = 0; off + sp.len() <= 12; ++off) {
      bool eq = true;
      for (int j = 0; j < sp.len(); ++j) eq = eq && (cv.frames[size_t(sp.s + j)] == imposter[size_t(off + j)]);
      matches += eq;
    }
    CHECK(matches == 1);
  }
}

TEST_CASE("empty plan is the identity under every mode") {
  std::vector<Mat> frames = const_frames(6, 0.2f);
  MaskPlan p;
  p.modality = MaskModality::Visual;
  p.T = 6;
  for (CorruptMode m : {CorruptMode::SubSameSeg, CorruptMode::LearnedEmb, CorruptMode::GaussNoise}) {
    CorruptedVisual cv = corrupt_visual(frames, p, frames, m, 3);
    for (int t = 0; t < 6; ++t) CHECK(cv.frames[size_t(t)] == frames[size_t(t)]);
  }
}

TEST_CASE("learned-embedding mode flags the span and leaves pixels alone elsewhere") {
  std::vector<Mat> frames = const_frames(6, 0.2f);
  MaskPlan p;
  p.modality = MaskModality::Visual;
  p.T = 6;
  p.spans = {{2, 4}};
  CorruptedVisual cv = corrupt_visual(frames, p, {}, CorruptMode::LearnedEmb, 3);
  CHECK(cv.learned_flags == std::vector<uint8_t>{0, 0, 1, 1, 0, 0});
  for (int t = 0; t < 6; ++t)
    if (t < 2 || t >= 4) CHECK(cv.frames[size_t(t)] == frames[size_t(t)]);
}

TEST_CASE("gaussian mode stays in range and leaves unmasked frames untouched") {
  std::vector<Mat> frames = const_frames(6, 0.2f);
  MaskPlan p;
  p.modality = MaskModality::Visual;
  p.T = 6;
  p.spans = {{1, 4}};
  CorruptedVisual cv = corrupt_visual(frames, p, {}, CorruptMode::GaussNoise, 3);
  CHECK(cv.frames[0] == frames[0]);
  CHECK(cv.frames[4] == frames[4]);
  for (int t = 1; t < 4; ++t) {
    CHECK_FALSE(cv.frames[size_t(t)] == frames[size_t(t)]);
    for (float v : cv.frames[size_t(t)].d) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
  }
}

TEST_CASE("sub-frm mode draws frames only from the imposter pool") {
  std::vector<Mat> frames = const_frames(8, 0.0f);
  std::vector<Mat> imposter = const_frames(8, 200.0f);
  MaskPlan p;
  p.modality = MaskModality::Visual;
  p.T = 8;
  p.spans = {{2, 6}};
  p.offsets = {0};
  p.imposter_len = 8;
  CorruptedVisual cv = corrupt_visual(frames, p, imposter, CorruptMode::SubSameFrm, 5);
  for (int t = 2; t < 6; ++t) {
    bool from_pool = false;
    for (const Mat &im : imposter) from_pool = from_pool || (cv.frames[size_t(t)] == im);
    CHECK(from_pool);
  }
}

TEST_CASE("substitution without an imposter is rejected") {
  std::vector<Mat> frames = const_frames(5, 0.0f);
  MaskPlan p;
  p.modality = MaskModality::Visual;
  p.T = 5;
  p.spans = {{1, 3}};
  p.offsets = {0};
  CHECK_THROWS_AS(corrupt_visual(frames, p, {}, CorruptMode::SubSameSeg, 0), ParamError);
}

TEST_CASE("audio flags equal span membership") {
  MaskPlan p;
  p.modality = MaskModality::Audio;
  p.T = 6;
  CHECK(corrupt_audio_flags(6, p) == std::vector<uint8_t>(6, 0));
  p.spans = {{0, 6}};
  CHECK(corrupt_audio_flags(6, p) == std::vector<uint8_t>(6, 1));
  p.spans = {{1, 3}, {5, 6}};
  CHECK(corrupt_audio_flags(6, p) == std::vector<uint8_t>{0, 1, 1, 0, 0, 1});
}

TEST_CASE("audio and visual streams mask independently") {
  // chi^2 independence test on the joint (audio masked, visual masked)
  // indicator of frame 10 over 10^4 plan pairs drawn from distinct streams.
  const int N = 10000, T = 40;
  long n11 = 0, n10 = 0, n01 = 0, n00 = 0;
  for (int i = 0; i < N; ++i) {
    MaskPlan pa = sample_spans(T, 0.08, 10, MaskModality::Audio, mix_seed(1, "a", uint64_t(i)));
    MaskPlan pv = sample_spans(T, 0.06, 5, MaskModality::Visual, mix_seed(1, "v", uint64_t(i)));
    bool a = pa.flags()[10], v = pv.flags()[10];
    if (a && v) ++n11;
    else if (a) ++n10;
    else if (v) ++n01;
    else ++n00;
  }
  const double na = double(n11 + n10), nv = double(n11 + n01);
  auto cell = [&](long obs, double ea) {
    double e = std::max(ea, 1e-9);
    double d = double(obs) - e;
    return d * d / e;
  };
  double chi2 = cell(n11, na * nv / N) + cell(n10, na * (N - nv) / N) +
                cell(n01, (N - na) * nv / N) + cell(n00, (N - na) * (N - nv) / N);
  // 1 degree of freedom; 10.83 is the 0.001 quantile cutoff.
  CHECK(chi2 < 10.83);
}

TEST_CASE("plans serialize to json for debugging") {
  MaskPlan p = sample_spans(20, 0.2, 4, MaskModality::Fused, 13);
  nlohmann::json j = nlohmann::json::parse(p.to_json());
  CHECK(j.at("modality") == int(MaskModality::Fused));
  CHECK(j.at("T") == 20);
  CHECK(j.at("spans").size() == p.spans.size());
  for (size_t i = 0; i < p.spans.size(); ++i) {
    CHECK(j.at("spans")[i][0] == p.spans[i].s);
    CHECK(j.at("spans")[i][1] == p.spans[i].t);
  }
}
