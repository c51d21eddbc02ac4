// corpus/synth.hpp

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

#ifndef AVLEARN_CORPUS_SYNTH_HPP
#define AVLEARN_CORPUS_SYNTH_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "corpus/inventory.hpp"
#include "util/common.hpp"

namespace avlearn {

constexpr int kSampleRate = 16000;
constexpr int kVideoHz = 25;
constexpr int kSamplesPerVideoFrame = kSampleRate / kVideoHz;  // 640

// One synthetic clip: a hidden phone sequence drives a waveform (two
// sinusoids per phone at its formant pair, plus noise) and a mouth-image
// sequence (an ellipse whose opening tracks the viseme).
struct Utterance {
  std::vector<float> wave;          // length 640 * T, 16 kHz
  std::vector<Mat> frames;          // T grayscale images, pixels in [0, 1]
  std::vector<uint16_t> phone_labels;  // per video frame
  std::vector<uint16_t> word_seq;
  int speaker_id = 0;
  int T = 0;

  bool operator==(const Utterance &o) const {
    return wave == o.wave && frames == o.frames && phone_labels == o.phone_labels &&
           word_seq == o.word_seq && T == o.T;
  }
};

struct SynthConfig {
  int image_size = 16;
  float noise_sigma = 0.05f;       // audio noise std
  float pixel_sigma = 0.05f;       // image noise std
  float speaker_brightness = 0.1f; // per-speaker brightness offset scale
  int n_speakers = 20;
};

Utterance synth_utterance(const PhoneInventory &inv, const std::vector<uint16_t> &word_seq,
                          int speaker_id, uint64_t seed, const SynthConfig &cfg = {});

// Noise-free mouth render for a viseme; homophemous phones share this
// template exactly.
Mat render_mouth(int viseme_id, int n_visemes, int image_size, float brightness_offset,
                 float pixel_sigma, std::mt19937_64 *rng);

struct CorpusRecord {
  std::string path;
  std::string split;  // pretrain | labeled | validation | test
  int T = 0;
  int speaker = 0;
  std::vector<uint16_t> words;
};

struct CorpusManifest {
  uint64_t seed = 0;
  std::string config_hash;
  std::vector<CorpusRecord> records;

  std::vector<const CorpusRecord *> split(const std::string &name) const;
};

struct CorpusConfig {
  int n_pretrain = 100;
  int n_labeled = 20;
  int n_validation = 10;
  int n_test = 20;
  int min_words = 3;
  int max_words = 5;
  PhoneInventory inventory;
  SynthConfig synth;
};

// Writes utterance files plus manifest.json under out_dir.
CorpusManifest gen_corpus(const CorpusConfig &cfg, uint64_t seed, const std::string &out_dir);

void save_utterance(const Utterance &u, const std::string &path);
Utterance load_utterance(const std::string &path);

void save_manifest(const CorpusManifest &m, const std::string &path);
CorpusManifest load_manifest(const std::string &path);

}  // namespace avlearn

#endif  // AVLEARN_CORPUS_SYNTH_HPP
