// config/config.hpp

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

#ifndef AVLEARN_CONFIG_CONFIG_HPP
#define AVLEARN_CONFIG_CONFIG_HPP

#include <string>
#include <vector>

#include "corpus/synth.hpp"
#include "model/avhubert.hpp"
#include "train/trainer.hpp"

namespace avlearn {

// Experiment file: UTF-8 JSON with sections corpus / model / masking /
// training / finetune / paths plus a top-level seed. Every key has a
// default; unknown keys are a hard error so hyperparameter typos cannot
// silently fall back.
struct ExperimentConfig {
  uint64_t seed = 1;

  struct Corpus {
    int n_phones = 10;
    int n_visemes = 4;
    int n_words = 12;
    int n_pretrain = 100;
    int n_labeled = 20;
    int n_validation = 10;
    int n_test = 20;
    int min_words = 3;
    int max_words = 5;
    int image_size = 16;
    int n_speakers = 20;
    double noise_sigma = 0.05;
    double pixel_sigma = 0.05;
    double speaker_brightness = 0.1;
  } corpus;

  struct Model {
    int dim = 64;
    int layers = 3;
    int heads = 4;
    int ffn_dim = 256;
    int visual_hidden = 64;
    double dropout = 0.1;
    double attn_dropout = 0.1;
    double layer_drop = 0.1;
    double alpha = 0.0;
    double p_m = 0.5;
    double p_a = 0.5;
    bool use_positions = true;
  } model;

  struct Masking {
    std::string placement = "feature";  // "feature" | "input"
    double p_fused = 0.08;
    int l_fused = 10;
    double p_audio = 0.08;
    int l_audio = 10;
    double p_visual = 0.06;
    int l_visual = 5;
    std::string visual_mode = "sub-same-seg";
    bool same_sequence = true;
  } masking;

  struct Training {
    int iterations = 5;
    std::vector<int> k_schedule = {20, 20, 30, 40, 50};
    std::vector<int> cluster_layers;  // empty: schedule default
    int steps = 1000;
    double peak_lr = 0.002;
    double warmup_fraction = 0.08;
    int frame_budget = 1000;
    int val_every = 100;
  } training;

  struct Finetune {
    std::string mode = "AV";  // "AV" | "A" | "V"
    double freeze_fraction = 0.0;
    int steps = 1000;
    double peak_lr = 0.001;
    double warmup_fraction = 0.1;
    int frame_budget = 1000;
    int val_every = 100;
  } finetune;

  struct Paths {
    std::string corpus_dir;
    std::string out_dir;
  } paths;

  void validate() const;  // cross-field checks

  std::string to_json() const;  // defaults-resolved "effective" form
  static ExperimentConfig from_json(const std::string &text);
  static ExperimentConfig load(const std::string &path);
  void save(const std::string &path) const;

  // Section-to-module adapters.
  CorpusConfig corpus_config(uint64_t root_seed) const;
  ModelConfig model_config() const;
  MaskingSettings masking_settings() const;
  TrainSettings train_settings() const;
  IterationPlan iteration_plan() const;
  FinetuneSettings finetune_settings() const;
  Modality finetune_mode() const;
};

}  // namespace avlearn

#endif  // AVLEARN_CONFIG_CONFIG_HPP
