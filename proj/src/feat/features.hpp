// feat/features.hpp

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

#ifndef AVLEARN_FEAT_FEATURES_HPP
#define AVLEARN_FEAT_FEATURES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "util/common.hpp"

namespace avlearn {

enum class FeatureKind : uint8_t { Fbank26, Fbank104, Mfcc39, Hog, ModelLayer };

struct FeatureSequence {
  Mat data;          // [T_frames x D]
  int rate = 100;    // frames per second, 25 or 100
  FeatureKind kind = FeatureKind::Fbank26;
};

// Analysis constants. The dimension (26) and stride (10 ms) are the load
// bearing values; window/FFT/floor are conventional fills.
constexpr int kFftSize = 512;
constexpr int kWinSamples = 400;   // 25 ms at 16 kHz
constexpr int kHopSamples = 160;   // 10 ms
constexpr int kNumMel = 26;
constexpr float kLogFloor = 1e-10f;

// Frame count for a wave of n samples: ceil((n - 400) / 160) + 1; the last
// window is zero padded past the end of the signal.
int fbank_num_frames(size_t n_samples);

FeatureSequence logfbank(const std::vector<float> &wave, int sample_rate);

// 100 Hz 26-d fbank -> 25 Hz 104-d by concatenating frames 4t..4t+3;
// trailing remainder dropped.
FeatureSequence stack4(const FeatureSequence &fbank);

// 13 cepstra (c0 kept) + delta + delta-delta, regression window +-2 with
// edge replication.
FeatureSequence mfcc39(const std::vector<float> &wave, int sample_rate);

struct HogParams {
  int cell = 4;
  int bins = 9;
  float eps = 1e-6f;
};

FeatureSequence hog(const std::vector<Mat> &frames, const HogParams &p = {});

// 100 Hz assignments -> 25 Hz by majority vote over blocks of 4, ties to the
// earliest frame in the block. Output length floor(len/4).
std::vector<uint16_t> align_labels_25hz(const std::vector<uint16_t> &assignments);

// Repeat the last row until the sequence has n rows (model inputs need
// exactly T stacked frames while the fbank frame formula yields 4T-1).
void pad_rows_to(Mat &m, int n);

// Debug dump, "AVF1" container.
void save_features(const FeatureSequence &f, const std::string &path);
FeatureSequence load_features(const std::string &path);

// In-place per-column standardization given corpus statistics.
struct ColumnStats {
  std::vector<float> mean, stdev;
};
ColumnStats compute_column_stats(const std::vector<const Mat *> &mats);
void standardize_columns(Mat &m, const ColumnStats &s);

}  // namespace avlearn

#endif  // AVLEARN_FEAT_FEATURES_HPP
