// mask/masking.cc

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

#include "mask/masking.hpp"

#include <algorithm>
#include <random>

#include "json.hpp"
#include "util/rng.hpp"

namespace avlearn {

std::vector<uint8_t> MaskPlan::flags() const {
  std::vector<uint8_t> f(size_t(T), 0);
  for (const MaskSpan &sp : spans)
    for (int i = sp.s; i < sp.t; ++i) f[size_t(i)] = 1;
  return f;
}

int MaskPlan::masked_frames() const {
  int n = 0;
  for (const MaskSpan &sp : spans) n += sp.len();
  return n;
}

std::string MaskPlan::to_json() const {
  nlohmann::json j;
  j["modality"] = int(modality);
  j["T"] = T;
  j["imposter_len"] = imposter_len;
  for (const MaskSpan &sp : spans) j["spans"].push_back({sp.s, sp.t});
  j["offsets"] = offsets;
  j["fallback_spans"] = fallback_spans;
  return j.dump();
}

MaskPlan sample_spans(int T, double p_starts, int l, MaskModality modality, uint64_t seed) {
  if (T < 1) throw ParamError("sample_spans: T must be >= 1");
  if (p_starts < 0.0 || p_starts > 1.0) throw ParamError("sample_spans: p_starts out of [0,1]");
  if (l < 1) throw ParamError("sample_spans: l must be >= 1");

  auto rng = make_rng(seed, "mask-spans");
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  MaskPlan plan;
  plan.modality = modality;
  plan.T = T;
  std::vector<MaskSpan> raw;
  for (int t = 0; t < T; ++t)
    if (unit(rng) < p_starts) raw.push_back({t, std::min(t + l, T)});

  // Merge overlapping or adjacent spans (raw is already sorted by start).
  for (const MaskSpan &sp : raw) {
    if (!plan.spans.empty() && sp.s <= plan.spans.back().t)
      plan.spans.back().t = std::max(plan.spans.back().t, sp.t);
    else
      plan.spans.push_back(sp);
  }
  return plan;
}

void sample_offsets(MaskPlan &plan, int T_f, bool same_sequence, uint64_t seed,
                    bool allow_fallback) {
  auto rng = make_rng(seed, "mask-offsets");
  plan.imposter_len = T_f;
  plan.offsets.assign(plan.spans.size(), -1);
  plan.fallback_spans.clear();

  for (size_t i = 0; i < plan.spans.size(); ++i) {
    const MaskSpan &sp = plan.spans[i];
    const int len = sp.len();
    // Valid offset ranges [lo, hi], inclusive.
    std::vector<std::pair<int, int>> ranges;
    if (!same_sequence) {
      if (T_f - len >= 0) ranges.push_back({0, T_f - len});
    } else {
      if (2 * sp.s - sp.t >= 0) ranges.push_back({0, 2 * sp.s - sp.t});
      if (T_f - len >= sp.t) ranges.push_back({sp.t, T_f - len});
    }
    long total = 0;
    for (auto [lo, hi] : ranges) total += hi - lo + 1;
    if (total == 0) {
      if (!allow_fallback)
        throw MaskError("sample_offsets: empty offset domain for span [" +
                        std::to_string(sp.s) + "," + std::to_string(sp.t) + ")");
      plan.fallback_spans.push_back(int(i));
      continue;
    }
    std::uniform_int_distribution<long> pick(0, total - 1);
    long r = pick(rng);
    for (auto [lo, hi] : ranges) {
      long n = hi - lo + 1;
      if (r < n) {
        plan.offsets[i] = lo + int(r);
        break;
      }
      r -= n;
    }
  }
}

CorruptedVisual corrupt_visual(const std::vector<Mat> &frames, const MaskPlan &plan,
                               const std::vector<Mat> &imposter, CorruptMode mode, uint64_t seed) {
  if (plan.modality == MaskModality::Audio)
    throw ParamError("corrupt_visual: plan modality is audio");
  const bool substitution = mode == CorruptMode::SubSameSeg || mode == CorruptMode::SubSameFrm ||
                            mode == CorruptMode::SubDiffSeg;
  if (substitution && imposter.empty())
    throw ParamError("corrupt_visual: substitution mode needs imposter frames");

  CorruptedVisual out;
  out.frames = frames;  // unmasked frames stay bit-identical
  out.learned_flags.assign(frames.size(), 0);

  auto rng = make_rng(seed, "corrupt-visual");
  std::normal_distribution<float> gauss(0.5f, 0.2f);

  auto is_fallback = [&plan](size_t i) {
    return std::find(plan.fallback_spans.begin(), plan.fallback_spans.end(), int(i)) !=
           plan.fallback_spans.end();
  };

  for (size_t i = 0; i < plan.spans.size(); ++i) {
    const MaskSpan &sp = plan.spans[i];
    if (substitution && is_fallback(i)) {
      for (int t = sp.s; t < sp.t; ++t) out.learned_flags[size_t(t)] = 1;
      continue;
    }
    switch (mode) {
      case CorruptMode::SubSameSeg:
      case CorruptMode::SubDiffSeg: {
        const int p = plan.offsets.at(i);
        for (int t = sp.s; t < sp.t; ++t) out.frames[size_t(t)] = imposter[size_t(p + t - sp.s)];
        break;
      }
      case CorruptMode::SubSameFrm: {
        // Independent frames; in same-sequence use, avoid the span itself.
        std::vector<int> domain;
        for (int f = 0; f < int(imposter.size()); ++f)
          if (&imposter != &frames || f < sp.s || f >= sp.t) domain.push_back(f);
        if (domain.empty()) {
          for (int t = sp.s; t < sp.t; ++t) out.learned_flags[size_t(t)] = 1;
          break;
        }
        std::uniform_int_distribution<int> pick(0, int(domain.size()) - 1);
        for (int t = sp.s; t < sp.t; ++t) out.frames[size_t(t)] = imposter[size_t(domain[pick(rng)])];
        break;
      }
      case CorruptMode::LearnedEmb:
        for (int t = sp.s; t < sp.t; ++t) out.learned_flags[size_t(t)] = 1;
        break;
      case CorruptMode::GaussNoise:
        for (int t = sp.s; t < sp.t; ++t) {
          Mat &f = out.frames[size_t(t)];
          for (float &v : f.d) v = std::clamp(gauss(rng), 0.0f, 1.0f);
        }
        break;
    }
  }
  return out;
}

std::vector<uint8_t> corrupt_audio_flags(int T, const MaskPlan &plan) {
  if (plan.modality != MaskModality::Audio)
    throw ParamError("corrupt_audio_flags: plan modality is not audio");
  std::vector<uint8_t> f(size_t(T), 0);
  for (const MaskSpan &sp : plan.spans)
    for (int i = sp.s; i < sp.t && i < T; ++i) f[size_t(i)] = 1;
  return f;
}

}  // namespace avlearn
