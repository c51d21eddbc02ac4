// config/config.cc

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

#include "config/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"
#include "util/rng.hpp"

namespace avlearn {

using nlohmann::json;

namespace {

// Strict section reader: every key consumed must be declared, leftovers are
// errors named by their full path.
class Section {
 public:
  Section(const json &j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError("config section '" + name_ + "' must be an object");
  }

  template <typename T>
  void get(const char *key, T &into) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      into = it->get<T>();
    } catch (const json::exception &e) {
      throw ConfigError("config field '" + name_ + "." + key + "': " + e.what());
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw ConfigError("unknown config key '" + name_ + "." + it.key() + "'");
  }

 private:
  const json &j_;
  std::string name_;
  std::set<std::string> seen_;
};

CorruptMode parse_corrupt_mode(const std::string &s) {
  if (s == "sub-same-seg") return CorruptMode::SubSameSeg;
  if (s == "sub-same-frm") return CorruptMode::SubSameFrm;
  if (s == "sub-diff-seg") return CorruptMode::SubDiffSeg;
  if (s == "learned-emb") return CorruptMode::LearnedEmb;
  if (s == "gauss-noise") return CorruptMode::GaussNoise;
  throw ConfigError("masking.visual_mode: unknown mode '" + s + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
  const auto &c = corpus;
  if (c.n_visemes < 2 || c.n_phones <= c.n_visemes || c.n_phones > 30)
    throw ConfigError("corpus: need 2 <= n_visemes < n_phones <= 30");
  if (c.n_words < 2 || c.min_words < 1 || c.max_words < c.min_words)
    throw ConfigError("corpus: bad lexicon or word-count range");
  if (c.n_pretrain < 1 || c.n_labeled < 1 || c.n_validation < 1 || c.n_test < 1)
    throw ConfigError("corpus: all split sizes must be positive");
  if (c.noise_sigma < 0 || c.pixel_sigma < 0 || c.image_size < 8)
    throw ConfigError("corpus: bad synthesis parameters");

  model_config().validate();  // architecture invariants

  const auto &m = masking;
  if (m.placement != "feature" && m.placement != "input")
    throw ConfigError("masking.placement must be 'feature' or 'input'");
  for (double p : {m.p_fused, m.p_audio, m.p_visual})
    if (p < 0 || p >= 1) throw ConfigError("masking: span start probabilities must be in [0,1)");
  if (m.l_fused < 1 || m.l_audio < 1 || m.l_visual < 1)
    throw ConfigError("masking: span lengths must be >= 1");
  parse_corrupt_mode(m.visual_mode);

  const auto &t = training;
  if (t.iterations < 1) throw ConfigError("training.iterations must be >= 1");
  if (t.k_schedule.empty()) throw ConfigError("training.k_schedule must be nonempty");
  for (int k : t.k_schedule)
    if (k < 2) throw ConfigError("training.k_schedule entries must be >= 2");
  for (int l : t.cluster_layers)
    if (l < 1 || l > model.layers)
      throw ConfigError("training.cluster_layers: layer index out of range for " +
                        std::to_string(model.layers) + " layers");
  if (t.steps < 0 || t.frame_budget < 1 || t.val_every < 1)
    throw ConfigError("training: bad steps/frame_budget/val_every");
  if (t.peak_lr <= 0 || t.warmup_fraction <= 0 || t.warmup_fraction >= 1)
    throw ConfigError("training: need peak_lr > 0 and warmup_fraction in (0,1)");

  const auto &f = finetune;
  if (f.mode != "AV" && f.mode != "A" && f.mode != "V")
    throw ConfigError("finetune.mode must be 'AV', 'A' or 'V'");
  if (f.freeze_fraction < 0 || f.freeze_fraction > 1)
    throw ConfigError("finetune.freeze_fraction must be in [0,1]");
  if (f.steps < 0 || f.frame_budget < 1 || f.val_every < 1)
    throw ConfigError("finetune: bad steps/frame_budget/val_every");
  if (f.peak_lr <= 0 || f.warmup_fraction <= 0 || f.warmup_fraction >= 1)
    throw ConfigError("finetune: need peak_lr > 0 and warmup_fraction in (0,1)");

  iteration_plan().validate();
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["corpus"] = {{"n_phones", corpus.n_phones},
                 {"n_visemes", corpus.n_visemes},
                 {"n_words", corpus.n_words},
                 {"n_pretrain", corpus.n_pretrain},
                 {"n_labeled", corpus.n_labeled},
                 {"n_validation", corpus.n_validation},
                 {"n_test", corpus.n_test},
                 {"min_words", corpus.min_words},
                 {"max_words", corpus.max_words},
                 {"image_size", corpus.image_size},
                 {"n_speakers", corpus.n_speakers},
                 {"noise_sigma", corpus.noise_sigma},
                 {"pixel_sigma", corpus.pixel_sigma},
                 {"speaker_brightness", corpus.speaker_brightness}};
  j["model"] = {{"dim", model.dim},
                {"layers", model.layers},
                {"heads", model.heads},
                {"ffn_dim", model.ffn_dim},
                {"visual_hidden", model.visual_hidden},
                {"dropout", model.dropout},
                {"attn_dropout", model.attn_dropout},
                {"layer_drop", model.layer_drop},
                {"alpha", model.alpha},
                {"p_m", model.p_m},
                {"p_a", model.p_a},
                {"use_positions", model.use_positions}};
  j["masking"] = {{"placement", masking.placement},
                  {"p_fused", masking.p_fused},
                  {"l_fused", masking.l_fused},
                  {"p_audio", masking.p_audio},
                  {"l_audio", masking.l_audio},
                  {"p_visual", masking.p_visual},
                  {"l_visual", masking.l_visual},
                  {"visual_mode", masking.visual_mode},
                  {"same_sequence", masking.same_sequence}};
  j["training"] = {{"iterations", training.iterations},
                   {"k_schedule", training.k_schedule},
                   {"cluster_layers", training.cluster_layers},
                   {"steps", training.steps},
                   {"peak_lr", training.peak_lr},
                   {"warmup_fraction", training.warmup_fraction},
                   {"frame_budget", training.frame_budget},
                   {"val_every", training.val_every}};
  j["finetune"] = {{"mode", finetune.mode},
                   {"freeze_fraction", finetune.freeze_fraction},
                   {"steps", finetune.steps},
                   {"peak_lr", finetune.peak_lr},
                   {"warmup_fraction", finetune.warmup_fraction},
                   {"frame_budget", finetune.frame_budget},
                   {"val_every", finetune.val_every}};
  j["paths"] = {{"corpus_dir", paths.corpus_dir}, {"out_dir", paths.out_dir}};
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string &text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception &e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  ExperimentConfig c;
  Section top(j, "");
  top.get("seed", c.seed);

  json sub = json::object();
  top.get("corpus", sub);
  {
    Section s(sub, "corpus");
    s.get("n_phones", c.corpus.n_phones);
    s.get("n_visemes", c.corpus.n_visemes);
    s.get("n_words", c.corpus.n_words);
    s.get("n_pretrain", c.corpus.n_pretrain);
    s.get("n_labeled", c.corpus.n_labeled);
    s.get("n_validation", c.corpus.n_validation);
    s.get("n_test", c.corpus.n_test);
    s.get("min_words", c.corpus.min_words);
    s.get("max_words", c.corpus.max_words);
    s.get("image_size", c.corpus.image_size);
    s.get("n_speakers", c.corpus.n_speakers);
    s.get("noise_sigma", c.corpus.noise_sigma);
    s.get("pixel_sigma", c.corpus.pixel_sigma);
    s.get("speaker_brightness", c.corpus.speaker_brightness);
    s.finish();
  }
  sub = json::object();
  top.get("model", sub);
  {
    Section s(sub, "model");
    s.get("dim", c.model.dim);
    s.get("layers", c.model.layers);
    s.get("heads", c.model.heads);
    s.get("ffn_dim", c.model.ffn_dim);
    s.get("visual_hidden", c.model.visual_hidden);
    s.get("dropout", c.model.dropout);
    s.get("attn_dropout", c.model.attn_dropout);
    s.get("layer_drop", c.model.layer_drop);
    s.get("alpha", c.model.alpha);
    s.get("p_m", c.model.p_m);
    s.get("p_a", c.model.p_a);
    s.get("use_positions", c.model.use_positions);
    s.finish();
  }
  sub = json::object();
  top.get("masking", sub);
  {
    Section s(sub, "masking");
    s.get("placement", c.masking.placement);
    s.get("p_fused", c.masking.p_fused);
    s.get("l_fused", c.masking.l_fused);
    s.get("p_audio", c.masking.p_audio);
    s.get("l_audio", c.masking.l_audio);
    s.get("p_visual", c.masking.p_visual);
    s.get("l_visual", c.masking.l_visual);
    s.get("visual_mode", c.masking.visual_mode);
    s.get("same_sequence", c.masking.same_sequence);
    s.finish();
  }
  sub = json::object();
  top.get("training", sub);
  {
    Section s(sub, "training");
    s.get("iterations", c.training.iterations);
    s.get("k_schedule", c.training.k_schedule);
    s.get("cluster_layers", c.training.cluster_layers);
    s.get("steps", c.training.steps);
    s.get("peak_lr", c.training.peak_lr);
    s.get("warmup_fraction", c.training.warmup_fraction);
    s.get("frame_budget", c.training.frame_budget);
    s.get("val_every", c.training.val_every);
    s.finish();
  }
  sub = json::object();
  top.get("finetune", sub);
  {
    Section s(sub, "finetune");
    s.get("mode", c.finetune.mode);
    s.get("freeze_fraction", c.finetune.freeze_fraction);
    s.get("steps", c.finetune.steps);
    s.get("peak_lr", c.finetune.peak_lr);
    s.get("warmup_fraction", c.finetune.warmup_fraction);
    s.get("frame_budget", c.finetune.frame_budget);
    s.get("val_every", c.finetune.val_every);
    s.finish();
  }
  sub = json::object();
  top.get("paths", sub);
  {
    Section s(sub, "paths");
    s.get("corpus_dir", c.paths.corpus_dir);
    s.get("out_dir", c.paths.out_dir);
    s.finish();
  }
  top.finish();
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return from_json(text);
}

void ExperimentConfig::save(const std::string &path) const {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write config file: " + path);
  os << to_json() << "\n";
}

CorpusConfig ExperimentConfig::corpus_config(uint64_t root_seed) const {
  CorpusConfig cc;
  cc.n_pretrain = corpus.n_pretrain;
  cc.n_labeled = corpus.n_labeled;
  cc.n_validation = corpus.n_validation;
  cc.n_test = corpus.n_test;
  cc.min_words = corpus.min_words;
  cc.max_words = corpus.max_words;
  cc.inventory = build_inventory(corpus.n_phones, corpus.n_visemes, corpus.n_words,
                                 mix_seed(root_seed, "inventory"));
  cc.synth.image_size = corpus.image_size;
  cc.synth.noise_sigma = float(corpus.noise_sigma);
  cc.synth.pixel_sigma = float(corpus.pixel_sigma);
  cc.synth.speaker_brightness = float(corpus.speaker_brightness);
  cc.synth.n_speakers = corpus.n_speakers;
  return cc;
}

ModelConfig ExperimentConfig::model_config() const {
  ModelConfig mc;
  mc.dim = model.dim;
  mc.layers = model.layers;
  mc.heads = model.heads;
  mc.ffn_dim = model.ffn_dim;
  mc.visual_hidden = model.visual_hidden;
  mc.dropout = model.dropout;
  mc.attn_dropout = model.attn_dropout;
  mc.layer_drop = model.layer_drop;
  mc.alpha = model.alpha;
  mc.p_m = model.p_m;
  mc.p_a = model.p_a;
  mc.image_size = corpus.image_size;
  mc.use_positions = model.use_positions;
  return mc;
}

MaskingSettings ExperimentConfig::masking_settings() const {
  MaskingSettings ms;
  ms.input_level = masking.placement == "input";
  ms.p_fused = masking.p_fused;
  ms.l_fused = masking.l_fused;
  ms.p_audio = masking.p_audio;
  ms.l_audio = masking.l_audio;
  ms.p_visual = masking.p_visual;
  ms.l_visual = masking.l_visual;
  ms.visual_mode = parse_corrupt_mode(masking.visual_mode);
  ms.same_sequence = masking.same_sequence;
  return ms;
}

TrainSettings ExperimentConfig::train_settings() const {
  TrainSettings ts;
  ts.steps = training.steps;
  ts.peak_lr = training.peak_lr;
  ts.warmup_fraction = training.warmup_fraction;
  ts.frame_budget = training.frame_budget;
  ts.val_every = training.val_every;
  return ts;
}

IterationPlan ExperimentConfig::iteration_plan() const {
  IterationPlan plan = default_plan(training.iterations, model.layers, train_settings(),
                                    training.k_schedule);
  for (size_t i = 0; i < plan.iterations.size(); ++i) {
    // default_plan marks the final stage input-level; "input" placement in
    // the config makes every stage input-level.
    const bool final_stage_input = plan.iterations[i].masking.input_level;
    MaskingSettings ms = masking_settings();
    ms.input_level = ms.input_level || final_stage_input;
    plan.iterations[i].masking = ms;
    if (i < training.cluster_layers.size())
      plan.iterations[i].cluster_layer = training.cluster_layers[i];
  }
  return plan;
}

FinetuneSettings ExperimentConfig::finetune_settings() const {
  FinetuneSettings fs;
  fs.train.steps = finetune.steps;
  fs.train.peak_lr = finetune.peak_lr;
  fs.train.warmup_fraction = finetune.warmup_fraction;
  fs.train.frame_budget = finetune.frame_budget;
  fs.train.val_every = finetune.val_every;
  fs.freeze_fraction = finetune.freeze_fraction;
  return fs;
}

Modality ExperimentConfig::finetune_mode() const {
  if (finetune.mode == "AV") return Modality::AV;
  if (finetune.mode == "A") return Modality::A;
  return Modality::V;
}

}  // namespace avlearn
