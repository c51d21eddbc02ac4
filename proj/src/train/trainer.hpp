// train/trainer.hpp

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

#ifndef AVLEARN_TRAIN_TRAINER_HPP
#define AVLEARN_TRAIN_TRAINER_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cluster/targets.hpp"
#include "corpus/synth.hpp"
#include "mask/masking.hpp"
#include "model/avhubert.hpp"

namespace avlearn {

// In-memory utterance with precomputed inputs; waves are dropped after
// feature extraction.
struct LoadedUtterance {
  std::vector<Mat> frames;           // T mouth images
  Mat audio_feat;                    // [T x 104] stacked fbank, padded to T rows
  Mat mfcc;                          // [~4T x 39] at 100 Hz, for initial targets
  std::vector<uint16_t> phone_labels;  // ground truth at 25 Hz
  std::vector<uint16_t> word_seq;
  std::vector<uint16_t> phone_seq;   // lexicon expansion, CTC target
  int T = 0;
};

struct CorpusData {
  PhoneInventory inv;
  std::vector<LoadedUtterance> utts;
  std::vector<int> pretrain, labeled, validation, test;
};

CorpusData load_corpus(const std::string &dir);

enum class Modality { AV, A, V };
std::string modality_name(Modality m);

// Pretraining variant "source/init->output": the source-modality model is
// trained across iterations to refine clusters; the final iteration trains
// the output-modality model on the last clusters.
struct Variant {
  std::string name;
  Modality source_modality = Modality::AV;
  Modality output_modality = Modality::AV;
  std::string init_feature = "mfcc";  // "mfcc" | "hog"
};

// Accepts "AV/MFCC->AV", "V/HoG->V", "A/MFCC->A", ... (case-insensitive,
// "->" or unicode arrow).
Variant parse_variant(const std::string &name);

struct MaskingSettings {
  bool input_level = false;  // false: span-mask the fused features
  double p_fused = 0.08;
  int l_fused = 10;
  double p_audio = 0.08;
  int l_audio = 10;
  double p_visual = 0.06;
  int l_visual = 5;
  CorruptMode visual_mode = CorruptMode::SubSameSeg;
  bool same_sequence = true;  // imposter from the same utterance
};

struct TrainSettings {
  int steps = 1000;
  double peak_lr = 0.002;
  double warmup_fraction = 0.08;
  int frame_budget = 1000;  // max video frames per batch; utterances never split
  int val_every = 100;
};

struct IterationSpec {
  std::string source = "init";  // "init" (the variant's signal feature) | "model"
  int K = 20;
  // 1-based layer read out of THIS iteration's model when it produces the
  // next iteration's targets.
  int cluster_layer = 0;
  MaskingSettings masking;
  TrainSettings train;
};

struct IterationPlan {
  std::vector<IterationSpec> iterations;
  void validate() const;
};

// Desk-scale default: n iterations, K schedule {20,20,30,40,50} clipped,
// feature-level masking except the last iteration, cluster layers
// {ceil(0.75 L), L, L, ...}.
IterationPlan default_plan(int n_iterations, int layers, const TrainSettings &train,
                           const std::vector<int> &k_schedule = {20, 20, 30, 40, 50});

struct IterationRecord {
  int iteration = 0;
  int layer = 0;  // 0 for signal-feature targets
  int K = 0;
  double purity = 0.0, nmi = 0.0;
  double train_loss = 0.0, val_loss = 0.0;
  std::string target_source;
  std::string checkpoint, codebook_file, targets_file;
};

struct RunRecord {
  std::string dir;
  uint64_t seed = 0;
  std::string variant;
  std::vector<IterationRecord> iterations;
};

void save_run_record(const RunRecord &r);
RunRecord load_run_record(const std::string &dir);

// Global-indexed targets (entries for utterances outside the covered splits
// stay empty).
struct TargetSet {
  int K = 0;
  std::string source;
  std::vector<std::vector<uint16_t>> z;  // size = utts.size()
  Codebook codebook;
  double purity_vs_labels = 0.0;
  double nmi_vs_labels = 0.0;
};

// Cluster signal features ("mfcc" | "hog") of the pretrain+validation splits.
TargetSet make_signal_targets(const CorpusData &data, const std::string &feature, int K,
                              uint64_t seed);

// Cluster eval-mode model features from the given layer, read out through the
// model's own modality branch.
TargetSet make_model_targets(const CorpusData &data, AVHubert32 &model, Modality modality,
                             int layer, int K, uint64_t seed, const std::string &source_desc);

struct PretrainOutcome {
  std::unique_ptr<AVHubert32> model;  // best-validation parameters
  double final_train_loss = 0.0;
  double best_val_loss = 0.0;
  std::vector<double> loss_curve;
};

// One masked-prediction training stage.
PretrainOutcome pretrain_iteration(const CorpusData &data, const TargetSet &targets,
                                   const ModelConfig &mc, Modality modality,
                                   const MaskingSettings &masking, const TrainSettings &train,
                                   uint64_t seed);

// The cluster/predict alternation for a variant; writes a RunRecord directory
// (codebooks, targets, checkpoints, metrics.csv) under out_dir.
struct IterativeOutcome {
  RunRecord record;
  std::unique_ptr<AVHubert32> model;  // output-modality model of the last iteration
};

IterativeOutcome iterative_pretrain(const CorpusData &data, const Variant &variant,
                                    const IterationPlan &plan, const ModelConfig &mc,
                                    const std::string &out_dir, uint64_t seed);

struct FinetuneSettings {
  TrainSettings train{/*steps=*/1000, /*peak_lr=*/0.001, /*warmup_fraction=*/0.1,
                      /*frame_budget=*/1000, /*val_every=*/100};
  double freeze_fraction = 0.0;  // encoder frozen for this fraction of steps
};

struct FinetuneOutcome {
  std::unique_ptr<AVHubert32> model;  // best validation CTC loss
  double best_val_loss = 0.0;
  std::vector<double> loss_curve;
};

// CTC fine-tuning on the labeled split; init == nullptr trains the scratch
// baseline with an identical architecture and budget. Extra pseudo-labeled
// utterances (index, phone sequence) may extend the training set.
using PseudoLabels = std::vector<std::pair<int, std::vector<uint16_t>>>;

FinetuneOutcome finetune(const CorpusData &data, const AVHubert32 *init, const ModelConfig &mc,
                         Modality input_mode, const FinetuneSettings &cfg, uint64_t seed,
                         const PseudoLabels *extra = nullptr);

// Greedy CTC phone decode of one utterance, eval mode.
std::vector<uint16_t> decode_phones(AVHubert32 &model, const LoadedUtterance &lu,
                                    Modality input_mode);

// Greedy-decode WER over a split (corpus-level: total edits / total ref words).
double evaluate_wer(const CorpusData &data, AVHubert32 &model, Modality input_mode,
                    const std::vector<int> &split);

// Pseudo-label a split with a fine-tuned model (empty decodes skipped), then
// fine-tune the pretrained model on labeled + pseudo-labeled data.  The
// labeling pass may use a richer input than the student: label_mode defaults
// to input_mode, but passing e.g. Modality::AV lets an audio-visual teacher
// transcribe the unlabeled audio while the student is trained lip-only.
FinetuneOutcome self_train(const CorpusData &data, AVHubert32 &finetuned,
                           const AVHubert32 &pretrained, Modality input_mode,
                           const std::vector<int> &unlabeled, const FinetuneSettings &cfg,
                           uint64_t seed,
                           std::optional<Modality> label_mode = std::nullopt);

}  // namespace avlearn

#endif  // AVLEARN_TRAIN_TRAINER_HPP
