// train/trainer.cc

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

#include "train/trainer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>

#include "cluster/metrics.hpp"
#include "decode/decode.hpp"
#include "feat/features.hpp"
#include "json.hpp"
#include "nn/checkpoint.hpp"
#include "nn/optim.hpp"
#include "util/rng.hpp"

namespace fs = std::filesystem;

namespace avlearn {

CorpusData load_corpus(const std::string &dir) {
  fs::path root(dir);
  CorpusManifest m = load_manifest((root / "manifest.json").string());
  CorpusData d;
  d.inv = load_inventory((root / "inventory.json").string());
  d.utts.resize(m.records.size());
  for (size_t i = 0; i < m.records.size(); ++i) {
    const CorpusRecord &rec = m.records[i];
    fs::path p(rec.path);
    Utterance u = load_utterance((p.is_absolute() ? p : root / p).string());
    LoadedUtterance &lu = d.utts[i];
    lu.T = u.T;
    lu.frames = std::move(u.frames);
    lu.phone_labels = std::move(u.phone_labels);
    lu.word_seq = std::move(u.word_seq);
    for (uint16_t w : lu.word_seq) {
      if (w >= d.inv.words.size()) throw FormatError("load_corpus: word id out of lexicon");
      for (int ph : d.inv.words[w]) lu.phone_seq.push_back(uint16_t(ph));
    }
    FeatureSequence fb = logfbank(u.wave, kSampleRate);
    pad_rows_to(fb.data, 4 * u.T);  // analysis yields 4T-1 rows; repeat the last
    FeatureSequence st = stack4(fb);
    lu.audio_feat = std::move(st.data);
    lu.mfcc = mfcc39(u.wave, kSampleRate).data;

    if (rec.split == "pretrain") d.pretrain.push_back(int(i));
    else if (rec.split == "labeled") d.labeled.push_back(int(i));
    else if (rec.split == "validation") d.validation.push_back(int(i));
    else if (rec.split == "test") d.test.push_back(int(i));
    else throw FormatError("load_corpus: unknown split '" + rec.split + "'");
  }
  return d;
}

std::string modality_name(Modality m) {
  switch (m) {
    case Modality::AV: return "AV";
    case Modality::A: return "A";
    case Modality::V: return "V";
  }
  throw ParamError("modality_name: bad modality");
}

static Modality parse_modality(const std::string &s) {
  if (s == "AV") return Modality::AV;
  if (s == "A") return Modality::A;
  if (s == "V") return Modality::V;
  throw ConfigError("unknown modality '" + s + "' (expected AV, A or V)");
}

Variant parse_variant(const std::string &name) {
  std::string up;
  for (char c : name)
    if (!std::isspace(uint8_t(c))) up.push_back(char(std::toupper(uint8_t(c))));
  // Tolerate a unicode arrow.
  size_t arrow = up.find("\xE2\x86\x92");
  size_t arrow_len = 3;
  if (arrow == std::string::npos) {
    arrow = up.find("->");
    arrow_len = 2;
  }
  size_t slash = up.find('/');
  if (arrow == std::string::npos || slash == std::string::npos || slash > arrow)
    throw ConfigError("bad variant '" + name + "' (expected SOURCE/FEATURE->OUTPUT)");
  Variant v;
  v.name = up.substr(0, arrow) + "->" + up.substr(arrow + arrow_len);
  v.source_modality = parse_modality(up.substr(0, slash));
  v.output_modality = parse_modality(up.substr(arrow + arrow_len));
  std::string feat = up.substr(slash + 1, arrow - slash - 1);
  if (feat == "MFCC") v.init_feature = "mfcc";
  else if (feat == "HOG") v.init_feature = "hog";
  else throw ConfigError("bad variant '" + name + "': unknown initial feature '" + feat + "'");
  return v;
}

void IterationPlan::validate() const {
  if (iterations.empty()) throw ConfigError("iteration plan is empty");
  for (size_t i = 0; i < iterations.size(); ++i) {
    const IterationSpec &s = iterations[i];
    if (i == 0 && s.source != "init")
      throw ConfigError("iteration 1 must use a signal-feature target source");
    if (i > 0 && s.source != "model")
      throw ConfigError("iterations after the first must cluster model features");
    if (s.K < 2) throw ConfigError("iteration plan: K must be >= 2");
    if (i >= 2 && s.K < iterations[i - 1].K)
      throw ConfigError("iteration plan: K schedule must be non-decreasing after iteration 2");
    if (s.train.steps < 0 || s.train.frame_budget < 1)
      throw ConfigError("iteration plan: bad training settings");
  }
}

IterationPlan default_plan(int n_iterations, int layers, const TrainSettings &train,
                           const std::vector<int> &k_schedule) {
  if (n_iterations < 1) throw ConfigError("default_plan: need at least one iteration");
  if (k_schedule.empty()) throw ConfigError("default_plan: empty K schedule");
  IterationPlan plan;
  for (int i = 0; i < n_iterations; ++i) {
    IterationSpec s;
    s.source = i == 0 ? "init" : "model";
    s.K = k_schedule[std::min(size_t(i), k_schedule.size() - 1)];
    s.cluster_layer = i == 0 ? std::max(1, int(std::ceil(0.75 * layers))) : std::max(1, layers);
    s.train = train;
    if (i + 1 == n_iterations && n_iterations > 1) {
      // Final stage: mask the raw inputs rather than the fused features.
      s.masking.input_level = true;
    }
    plan.iterations.push_back(s);
  }
  return plan;
}

// ---- run record persistence ----

void save_run_record(const RunRecord &r) {
  nlohmann::json j;
  j["seed"] = r.seed;
  j["variant"] = r.variant;
  j["iterations"] = nlohmann::json::array();
  for (const IterationRecord &ir : r.iterations) {
    j["iterations"].push_back({{"iteration", ir.iteration},
                               {"layer", ir.layer},
                               {"K", ir.K},
                               {"purity", ir.purity},
                               {"nmi", ir.nmi},
                               {"train_loss", ir.train_loss},
                               {"val_loss", ir.val_loss},
                               {"target_source", ir.target_source},
                               {"checkpoint", ir.checkpoint},
                               {"codebook", ir.codebook_file},
                               {"targets", ir.targets_file}});
  }
  std::ofstream os(fs::path(r.dir) / "run.json");
  if (!os) throw IoError("cannot write run record in " + r.dir);
  os << j.dump(2) << "\n";
  os.close();

  std::ofstream csv(fs::path(r.dir) / "metrics.csv");
  if (!csv) throw IoError("cannot write metrics.csv in " + r.dir);
  csv << "iteration,layer,K,purity,nmi,train_loss,val_loss\n";
  for (const IterationRecord &ir : r.iterations)
    csv << ir.iteration << "," << ir.layer << "," << ir.K << "," << ir.purity << "," << ir.nmi
        << "," << ir.train_loss << "," << ir.val_loss << "\n";
}

RunRecord load_run_record(const std::string &dir) {
  std::ifstream is(fs::path(dir) / "run.json");
  if (!is) throw IoError("no run record in " + dir);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception &e) {
    throw FormatError("bad run record in " + dir + ": " + e.what());
  }
  RunRecord r;
  r.dir = dir;
  r.seed = j.at("seed");
  r.variant = j.at("variant");
  for (const auto &ij : j.at("iterations")) {
    IterationRecord ir;
    ir.iteration = ij.at("iteration");
    ir.layer = ij.at("layer");
    ir.K = ij.at("K");
    ir.purity = ij.at("purity");
    ir.nmi = ij.at("nmi");
    ir.train_loss = ij.at("train_loss");
    ir.val_loss = ij.at("val_loss");
    ir.target_source = ij.at("target_source");
    ir.checkpoint = ij.at("checkpoint");
    ir.codebook_file = ij.at("codebook");
    ir.targets_file = ij.at("targets");
    r.iterations.push_back(ir);
  }
  return r;
}

// ---- targets ----

static std::vector<int> covered_indices(const CorpusData &data) {
  std::vector<int> idx = data.pretrain;
  idx.insert(idx.end(), data.validation.begin(), data.validation.end());
  return idx;
}

static TargetSet finish_targets(const CorpusData &data, const std::vector<int> &idx,
                                TargetResult &&res) {
  TargetSet out;
  out.K = res.targets.K;
  out.source = res.targets.source;
  out.codebook = std::move(res.codebook);
  out.z.assign(data.utts.size(), {});
  std::vector<uint16_t> zc, lc;
  for (size_t j = 0; j < idx.size(); ++j) {
    const LoadedUtterance &lu = data.utts[size_t(idx[j])];
    zc.insert(zc.end(), res.targets.z[j].begin(), res.targets.z[j].end());
    lc.insert(lc.end(), lu.phone_labels.begin(), lu.phone_labels.end());
    out.z[size_t(idx[j])] = std::move(res.targets.z[j]);
  }
  out.purity_vs_labels = purity(zc, lc);
  out.nmi_vs_labels = nmi(zc, lc);
  return out;
}

TargetSet make_signal_targets(const CorpusData &data, const std::string &feature, int K,
                              uint64_t seed) {
  std::vector<int> idx = covered_indices(data);
  std::vector<FeatureSequence> feats;
  std::vector<int> expected_T;
  for (int i : idx) {
    const LoadedUtterance &lu = data.utts[size_t(i)];
    if (feature == "mfcc") {
      FeatureSequence f;
      f.data = lu.mfcc;
      f.rate = 100;
      f.kind = FeatureKind::Mfcc39;
      feats.push_back(std::move(f));
    } else if (feature == "hog") {
      feats.push_back(hog(lu.frames));
    } else {
      throw ConfigError("make_signal_targets: unknown feature '" + feature + "'");
    }
    expected_T.push_back(lu.T);
  }
  TargetOptions opt;
  opt.K = K;
  TargetResult res = make_targets(feats, expected_T, opt, mix_seed(seed, "fit-" + feature),
                                  feature);
  return finish_targets(data, idx, std::move(res));
}

static FuseMode eval_mode(Modality m) {
  switch (m) {
    case Modality::AV: return FuseMode::Both;
    case Modality::A: return FuseMode::AudioOnly;
    case Modality::V: return FuseMode::VisualOnly;
  }
  throw ParamError("eval_mode: bad modality");
}

TargetSet make_model_targets(const CorpusData &data, AVHubert32 &model, Modality modality,
                             int layer, int K, uint64_t seed, const std::string &source_desc) {
  std::vector<int> idx = covered_indices(data);
  std::vector<FeatureSequence> feats;
  std::vector<int> expected_T;
  for (int i : idx) {
    const LoadedUtterance &lu = data.utts[size_t(i)];
    FeatureSequence f;
    f.data = model.extract_features(lu.audio_feat, lu.frames, layer, eval_mode(modality));
    f.rate = 25;
    f.kind = FeatureKind::ModelLayer;
    feats.push_back(std::move(f));
    expected_T.push_back(lu.T);
  }
  TargetOptions opt;
  opt.K = K;
  TargetResult res = make_targets(feats, expected_T, opt, mix_seed(seed, "fit-model"),
                                  source_desc);
  return finish_targets(data, idx, std::move(res));
}

// ---- batching ----

namespace {

// Shuffled-epoch packer: batches are consecutive runs of a per-epoch random
// permutation, filled to the frame budget without splitting utterances.
class Batcher {
 public:
  Batcher(std::vector<int> idx, const CorpusData &data, int budget, uint64_t seed)
      : idx_(std::move(idx)), data_(&data), budget_(budget), seed_(seed) {
    if (idx_.empty()) throw ParamError("Batcher: empty index set");
    reshuffle();
  }

  std::vector<int> next() {
    std::vector<int> batch;
    int frames = 0;
    while (true) {
      if (pos_ == idx_.size()) reshuffle();
      int i = idx_[pos_];
      int T = data_->utts[size_t(i)].T;
      if (!batch.empty() && frames + T > budget_) break;
      batch.push_back(i);
      frames += T;
      ++pos_;
      if (frames >= budget_) break;
    }
    return batch;
  }

 private:
  void reshuffle() {
    auto rng = make_rng(seed_, "epoch", uint64_t(epoch_++));
    std::shuffle(idx_.begin(), idx_.end(), rng);
    pos_ = 0;
  }

  std::vector<int> idx_;
  const CorpusData *data_;
  size_t pos_ = 0;
  int budget_;
  uint64_t seed_;
  int epoch_ = 0;
};

Mat node_to_mat(const Tape32::Node *n) {
  Mat m(n->rows, n->cols);
  for (size_t i = 0; i < n->val.size(); ++i) m.d[i] = float(n->val[i]);
  return m;
}

std::vector<float> snapshot_params(AVHubert32 &model) {
  std::vector<float> flat;
  for (auto *p : model.params()) flat.insert(flat.end(), p->value.begin(), p->value.end());
  return flat;
}

void restore_params(AVHubert32 &model, const std::vector<float> &flat) {
  size_t off = 0;
  for (auto *p : model.params()) {
    std::copy_n(flat.begin() + long(off), p->size(), p->value.begin());
    off += p->size();
  }
}

// One masked-prediction forward; backward when grad_scale > 0. Returns the
// unweighted loss, or nothing when the sampled mask left no contributing
// frames.
std::optional<double> pretrain_pass(AVHubert32 &model, const LoadedUtterance &lu,
                                    const std::vector<uint16_t> &z, const MaskingSettings &ms,
                                    Modality modality, uint64_t mask_seed, bool train,
                                    std::mt19937_64 *drop_rng, double grad_scale) {
  const ModelConfig &mc = model.config();
  const int T = lu.T;
  Tape32 t;

  FuseMode mode;
  switch (modality) {
    case Modality::A: mode = FuseMode::AudioOnly; break;
    case Modality::V: mode = FuseMode::VisualOnly; break;
    case Modality::AV: mode = train ? model.sample_branch(*drop_rng) : FuseMode::Both; break;
    default: throw ParamError("pretrain_pass: bad modality");
  }

  std::vector<uint8_t> fused_flags, union_flags;
  const std::vector<uint8_t> *fused_ptr = nullptr;
  std::vector<uint8_t> audio_flags;
  const std::vector<uint8_t> *audio_ptr = nullptr;
  CorruptedVisual cv;
  const std::vector<Mat> *frames = &lu.frames;
  const std::vector<uint8_t> *visual_emb_ptr = nullptr;

  if (!ms.input_level) {
    MaskPlan plan = sample_spans(T, ms.p_fused, ms.l_fused, MaskModality::Fused,
                                 mix_seed(mask_seed, "fused-spans"));
    fused_flags = plan.flags();
    union_flags = fused_flags;
    fused_ptr = &fused_flags;
  } else {
    MaskPlan ap = sample_spans(T, ms.p_audio, ms.l_audio, MaskModality::Audio,
                               mix_seed(mask_seed, "audio-spans"));
    audio_flags = corrupt_audio_flags(T, ap);
    audio_ptr = &audio_flags;

    MaskPlan vp = sample_spans(T, ms.p_visual, ms.l_visual, MaskModality::Visual,
                               mix_seed(mask_seed, "visual-spans"));
    if (ms.visual_mode == CorruptMode::SubSameSeg || ms.visual_mode == CorruptMode::SubDiffSeg)
      sample_offsets(vp, T, ms.same_sequence, mix_seed(mask_seed, "visual-offsets"),
                     /*allow_fallback=*/true);
    cv = corrupt_visual(lu.frames, vp, lu.frames, ms.visual_mode,
                        mix_seed(mask_seed, "visual-corrupt"));
    frames = &cv.frames;
    visual_emb_ptr = &cv.learned_flags;

    std::vector<uint8_t> vflags = vp.flags();
    union_flags.assign(size_t(T), 0);
    for (int i = 0; i < T; ++i)
      union_flags[size_t(i)] = uint8_t(audio_flags[size_t(i)] || vflags[size_t(i)]);
  }

  if (mc.alpha <= 0 &&
      std::none_of(union_flags.begin(), union_flags.end(), [](uint8_t f) { return f != 0; }))
    return std::nullopt;

  Tape32::Node *fa = mode == FuseMode::VisualOnly
                         ? nullptr
                         : model.encode_audio(t, lu.audio_feat, audio_ptr);
  Tape32::Node *fv = mode == FuseMode::AudioOnly
                         ? nullptr
                         : model.encode_visual(t, *frames, visual_emb_ptr);
  Tape32::Node *x = model.fuse(t, fa, fv, mode);
  std::vector<Tape32::Node *> outs = model.transformer_blocks(t, x, fused_ptr, train, drop_rng);
  Tape32::Node *logp = model.predict_clusters(t, outs.back());
  Tape32::Node *loss = masked_loss(t, logp, z, union_flags, mc.alpha);
  double value = double(loss->val[0]);
  if (grad_scale > 0) t.backward(t.scale(loss, float(grad_scale)));
  return value;
}

double pretrain_validate(AVHubert32 &model, const CorpusData &data, const TargetSet &targets,
                         const MaskingSettings &ms, Modality modality, uint64_t seed) {
  double total = 0;
  int n = 0;
  for (int i : data.validation) {
    auto l = pretrain_pass(model, data.utts[size_t(i)], targets.z[size_t(i)], ms, modality,
                           mix_seed(seed, "val-mask", uint64_t(i)), false, nullptr, 0.0);
    if (l) {
      total += *l;
      ++n;
    }
  }
  return n > 0 ? total / n : std::numeric_limits<double>::infinity();
}

}  // namespace

PretrainOutcome pretrain_iteration(const CorpusData &data, const TargetSet &targets,
                                   const ModelConfig &mc, Modality modality,
                                   const MaskingSettings &masking, const TrainSettings &train,
                                   uint64_t seed) {
  if (targets.z.size() != data.utts.size())
    throw ConfigError("pretrain_iteration: targets not indexed like the corpus");
  for (int i : data.pretrain)
    if (int(targets.z[size_t(i)].size()) != data.utts[size_t(i)].T)
      throw ConfigError("pretrain_iteration: utterance " + std::to_string(i) +
                        " has no cluster targets");
  PretrainOutcome out;
  out.model = std::make_unique<AVHubert32>(mc, mix_seed(seed, "model-init"));
  AVHubert32 &model = *out.model;

  auto params = model.params();
  AdamT<float> adam;
  LrSchedule sched{train.peak_lr, train.steps, train.warmup_fraction};
  Batcher batcher(data.pretrain, data, train.frame_budget, mix_seed(seed, "batches"));
  auto drop_rng = make_rng(seed, "dropout");
  auto mask_base = mix_seed(seed, "train-masks");

  out.best_val_loss = pretrain_validate(model, data, targets, masking, modality, seed);
  std::vector<float> best = snapshot_params(model);

  uint64_t sample_counter = 0;
  for (int step = 1; step <= train.steps; ++step) {
    std::vector<int> batch = batcher.next();
    for (auto *p : params) p->zero_grad();
    double loss_sum = 0;
    int contributed = 0;
    for (int i : batch) {
      auto l = pretrain_pass(model, data.utts[size_t(i)], targets.z[size_t(i)], masking,
                             modality, mix_seed(mask_base, "s", sample_counter++), true,
                             &drop_rng, 1.0 / double(batch.size()));
      if (l) {
        loss_sum += *l;
        ++contributed;
      }
    }
    if (contributed > 0) adam.step(params, sched.lr_at(step));
    out.loss_curve.push_back(contributed ? loss_sum / contributed : 0.0);
    out.final_train_loss = out.loss_curve.back();

    if (step % train.val_every == 0 || step == train.steps) {
      double vl = pretrain_validate(model, data, targets, masking, modality, seed);
      if (vl < out.best_val_loss) {
        out.best_val_loss = vl;
        best = snapshot_params(model);
      }
    }
  }
  restore_params(model, best);
  return out;
}

IterativeOutcome iterative_pretrain(const CorpusData &data, const Variant &variant,
                                    const IterationPlan &plan, const ModelConfig &mc,
                                    const std::string &out_dir, uint64_t seed) {
  plan.validate();
  fs::create_directories(out_dir);
  IterativeOutcome out;
  out.record.dir = out_dir;
  out.record.seed = seed;
  out.record.variant = variant.name;

  const int n = int(plan.iterations.size());
  std::unique_ptr<AVHubert32> source_model;
  for (int i = 0; i < n; ++i) {
    const IterationSpec &spec = plan.iterations[i];
    char sub[16];
    std::snprintf(sub, sizeof sub, "iter%02d", i + 1);
    fs::path iter_dir = fs::path(out_dir) / sub;
    fs::create_directories(iter_dir);

    TargetSet targets;
    int target_layer = 0;
    if (i == 0) {
      targets = make_signal_targets(data, variant.init_feature, spec.K,
                                    mix_seed(seed, "targets", uint64_t(i)));
    } else {
      target_layer = plan.iterations[size_t(i - 1)].cluster_layer;
      std::string desc = "model-iter" + std::to_string(i) + "-layer" +
                         std::to_string(target_layer);
      targets = make_model_targets(data, *source_model, variant.source_modality, target_layer,
                                   spec.K, mix_seed(seed, "targets", uint64_t(i)), desc);
    }
    save_codebook(targets.codebook, (iter_dir / "codebook.avk").string());
    ClusterTargets ct{targets.K, targets.z, targets.source};
    save_targets(ct, (iter_dir / "targets.avt").string());

    Modality mod = (i + 1 == n) ? variant.output_modality : variant.source_modality;
    ModelConfig mci = mc;
    mci.codebook = targets.K;
    if (mod == Modality::A) {
      mci.p_m = 0.0;
      mci.p_a = 1.0;
    } else if (mod == Modality::V) {
      mci.p_m = 0.0;
      mci.p_a = 0.0;
    }

    PretrainOutcome po = pretrain_iteration(data, targets, mci, mod, spec.masking, spec.train,
                                            mix_seed(seed, "stage", uint64_t(i)));
    std::string ckpt = (iter_dir / "checkpoint.avp").string();
    {
      std::vector<const ParamT<float> *> cp;
      for (auto *p : po.model->params()) cp.push_back(p);
      save_checkpoint<float>(ckpt, mci.to_json(), cp);
    }

    IterationRecord ir;
    ir.iteration = i + 1;
    ir.layer = target_layer;
    ir.K = targets.K;
    ir.purity = targets.purity_vs_labels;
    ir.nmi = targets.nmi_vs_labels;
    ir.train_loss = po.final_train_loss;
    ir.val_loss = po.best_val_loss;
    ir.target_source = targets.source;
    ir.checkpoint = ckpt;
    ir.codebook_file = (iter_dir / "codebook.avk").string();
    ir.targets_file = (iter_dir / "targets.avt").string();
    out.record.iterations.push_back(ir);
    save_run_record(out.record);

    if (i + 1 == n) out.model = std::move(po.model);
    else source_model = std::move(po.model);
  }
  return out;
}

// ---- fine-tuning ----

namespace {

std::optional<double> ctc_pass(AVHubert32 &model, const LoadedUtterance &lu,
                               const std::vector<uint16_t> &target, FuseMode mode, bool train,
                               std::mt19937_64 *drop_rng, double grad_scale) {
  if (target.empty() || lu.T < ctc_min_frames(target)) return std::nullopt;
  Tape32 t;
  Tape32::Node *fa =
      mode == FuseMode::VisualOnly ? nullptr : model.encode_audio(t, lu.audio_feat, nullptr);
  Tape32::Node *fv =
      mode == FuseMode::AudioOnly ? nullptr : model.encode_visual(t, lu.frames, nullptr);
  Tape32::Node *x = model.fuse(t, fa, fv, mode);
  std::vector<Tape32::Node *> outs = model.transformer_blocks(t, x, nullptr, train, drop_rng);
  Tape32::Node *logp = model.ctc_log_probs(t, outs.back());
  Tape32::Node *loss = t.scale(ctc_loss(t, logp, target), float(1.0 / double(target.size())));
  double value = double(loss->val[0]);
  if (grad_scale > 0) t.backward(t.scale(loss, float(grad_scale)));
  return value;
}

double ctc_validate(AVHubert32 &model, const CorpusData &data, FuseMode mode) {
  double total = 0;
  int n = 0;
  for (int i : data.validation) {
    const LoadedUtterance &lu = data.utts[size_t(i)];
    auto l = ctc_pass(model, lu, lu.phone_seq, mode, false, nullptr, 0.0);
    if (l) {
      total += *l;
      ++n;
    }
  }
  return n > 0 ? total / n : std::numeric_limits<double>::infinity();
}

}  // namespace

FinetuneOutcome finetune(const CorpusData &data, const AVHubert32 *init, const ModelConfig &mc,
                         Modality input_mode, const FinetuneSettings &cfg, uint64_t seed,
                         const PseudoLabels *extra) {
  const int vocab = data.inv.n_phones();
  FinetuneOutcome out;
  ModelConfig base = init ? init->config() : mc;
  base.ctc_vocab = 0;
  out.model = std::make_unique<AVHubert32>(base, mix_seed(seed, "ft-init"));
  AVHubert32 &model = *out.model;
  if (init) {
    auto src = init->params();
    auto dst = model.params();
    if (src.size() != dst.size()) throw ParamError("finetune: parameter set mismatch");
    for (size_t i = 0; i < src.size(); ++i) {
      if (src[i]->name != dst[i]->name || src[i]->size() != dst[i]->size())
        throw ParamError("finetune: parameter mismatch at '" + dst[i]->name + "'");
      dst[i]->value = src[i]->value;
    }
  }
  model.attach_ctc_head(vocab, mix_seed(seed, "ft-head"));

  // Training set: labeled split plus optional pseudo-labeled extras.
  std::vector<int> train_idx = data.labeled;
  std::vector<const std::vector<uint16_t> *> target_of(data.utts.size(), nullptr);
  for (int i : data.labeled) target_of[size_t(i)] = &data.utts[size_t(i)].phone_seq;
  if (extra)
    for (const auto &[i, seq] : *extra) {
      if (target_of[size_t(i)]) continue;  // labeled ground truth wins
      target_of[size_t(i)] = &seq;
      train_idx.push_back(i);
    }

  const FuseMode mode = eval_mode(input_mode);
  auto params = model.params();
  auto enc_params = model.encoder_params();
  AdamT<float> adam;
  LrSchedule sched{cfg.train.peak_lr, cfg.train.steps, cfg.train.warmup_fraction};
  Batcher batcher(train_idx, data, cfg.train.frame_budget, mix_seed(seed, "ft-batches"));
  auto drop_rng = make_rng(seed, "ft-dropout");
  const int freeze_steps = int(std::lround(cfg.freeze_fraction * cfg.train.steps));

  out.best_val_loss = ctc_validate(model, data, mode);
  std::vector<float> best = snapshot_params(model);

  for (int step = 1; step <= cfg.train.steps; ++step) {
    std::vector<int> batch = batcher.next();
    for (auto *p : params) p->zero_grad();
    double loss_sum = 0;
    int contributed = 0;
    for (int i : batch) {
      auto l = ctc_pass(model, data.utts[size_t(i)], *target_of[size_t(i)], mode, true,
                        &drop_rng, 1.0 / double(batch.size()));
      if (l) {
        loss_sum += *l;
        ++contributed;
      }
    }
    if (step <= freeze_steps)
      for (auto *p : enc_params) p->zero_grad();
    if (contributed > 0) adam.step(params, sched.lr_at(step));
    out.loss_curve.push_back(contributed ? loss_sum / contributed : 0.0);

    if (step % cfg.train.val_every == 0 || step == cfg.train.steps) {
      double vl = ctc_validate(model, data, mode);
      if (vl < out.best_val_loss) {
        out.best_val_loss = vl;
        best = snapshot_params(model);
      }
    }
  }
  restore_params(model, best);
  return out;
}

static std::vector<uint16_t> decode_utterance(AVHubert32 &model, const LoadedUtterance &lu,
                                              FuseMode mode) {
  Tape32 t;
  Tape32::Node *fa =
      mode == FuseMode::VisualOnly ? nullptr : model.encode_audio(t, lu.audio_feat, nullptr);
  Tape32::Node *fv =
      mode == FuseMode::AudioOnly ? nullptr : model.encode_visual(t, lu.frames, nullptr);
  Tape32::Node *x = model.fuse(t, fa, fv, mode);
  std::vector<Tape32::Node *> outs = model.transformer_blocks(t, x, nullptr, false, nullptr);
  return greedy_decode(node_to_mat(model.ctc_log_probs(t, outs.back())));
}

std::vector<uint16_t> decode_phones(AVHubert32 &model, const LoadedUtterance &lu,
                                    Modality input_mode) {
  return decode_utterance(model, lu, eval_mode(input_mode));
}

double evaluate_wer(const CorpusData &data, AVHubert32 &model, Modality input_mode,
                    const std::vector<int> &split) {
  const FuseMode mode = eval_mode(input_mode);
  long edits = 0, ref_words = 0;
  for (int i : split) {
    const LoadedUtterance &lu = data.utts[size_t(i)];
    if (lu.word_seq.empty()) throw ParamError("evaluate_wer: utterance without reference");
    std::vector<uint16_t> phones = decode_utterance(model, lu, mode);
    std::vector<uint16_t> words = phones_to_words(phones, data.inv);
    edits += edit_distance(words, lu.word_seq);
    ref_words += long(lu.word_seq.size());
  }
  return double(edits) / double(ref_words);
}

FinetuneOutcome self_train(const CorpusData &data, AVHubert32 &finetuned,
                           const AVHubert32 &pretrained, Modality input_mode,
                           const std::vector<int> &unlabeled, const FinetuneSettings &cfg,
                           uint64_t seed, std::optional<Modality> label_mode) {
  if (unlabeled.empty()) throw ConfigError("self_train: empty unlabeled set");
  const FuseMode mode = eval_mode(label_mode.value_or(input_mode));
  PseudoLabels pl;
  for (int i : unlabeled) {
    std::vector<uint16_t> phones = decode_utterance(finetuned, data.utts[size_t(i)], mode);
    if (!phones.empty()) pl.emplace_back(i, std::move(phones));
  }
  return finetune(data, &pretrained, pretrained.config(), input_mode, cfg,
                  mix_seed(seed, "self-train"), &pl);
}

}  // namespace avlearn
