// mask/masking.hpp

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

#ifndef AVLEARN_MASK_MASKING_HPP
#define AVLEARN_MASK_MASKING_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "util/common.hpp"

namespace avlearn {

enum class MaskModality : uint8_t { Audio, Visual, Fused };

// How a masked visual span is corrupted.
enum class CorruptMode : uint8_t {
  SubSameSeg,   // contiguous imposter segment from the same sequence
  SubSameFrm,   // independently sampled frames from the same sequence
  SubDiffSeg,   // contiguous segment from a different sequence
  LearnedEmb,   // sentinel flag; the model substitutes its mask embedding
  GaussNoise,   // N(0.5, 0.2^2) pixels clipped to [0, 1]
};

struct MaskSpan {
  int s = 0;  // half-open [s, t)
  int t = 0;
  int len() const { return t - s; }
};

struct MaskPlan {
  std::vector<MaskSpan> spans;  // sorted, non-overlapping, non-adjacent
  MaskModality modality = MaskModality::Fused;
  std::vector<int> offsets;     // substitution source offsets, one per span
  int imposter_len = 0;
  // Spans whose same-sequence offset domain was empty; these fall back to
  // learned-embedding corruption.
  std::vector<int> fallback_spans;

  int T = 0;
  std::vector<uint8_t> flags() const;  // per-frame span membership
  int masked_frames() const;
  std::string to_json() const;
};

// Each frame is independently a span start with probability p_starts; spans
// run l frames (clipped at T); overlapping or adjacent spans merge.
MaskPlan sample_spans(int T, double p_starts, int l, MaskModality modality, uint64_t seed);

// Substitution offsets per span. Cross-sequence: uniform on
// [0, T_f - len]. Same-sequence: uniform on [0, 2s-t] u [t, T_f - len] so the
// imposter window never overlaps its own span; an empty domain raises
// MaskError unless allow_fallback, which records the span for
// learned-embedding corruption instead.
void sample_offsets(MaskPlan &plan, int T_f, bool same_sequence, uint64_t seed,
                    bool allow_fallback = false);

struct CorruptedVisual {
  std::vector<Mat> frames;
  std::vector<uint8_t> learned_flags;  // frames the model must replace
};

CorruptedVisual corrupt_visual(const std::vector<Mat> &frames, const MaskPlan &plan,
                               const std::vector<Mat> &imposter, CorruptMode mode, uint64_t seed);

// Audio masking is always by learned embedding: flags only, features
// untouched here.
std::vector<uint8_t> corrupt_audio_flags(int T, const MaskPlan &plan);

}  // namespace avlearn

#endif  // AVLEARN_MASK_MASKING_HPP
