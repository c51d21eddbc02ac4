// tools/avlearn_main.cc

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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "config/config.hpp"
#include "decode/decode.hpp"
#include "decode/report.hpp"
#include "eval/oracles.hpp"
#include "nn/checkpoint.hpp"
#include "train/trainer.hpp"
#include "util/binio.hpp"

namespace fs = std::filesystem;
using namespace avlearn;

namespace {

std::string peek_checkpoint_config(const std::string &path) {
  BinReader r(path);
  r.expect_magic("AVP1");
  if (r.u16() != 1) throw FormatError("unsupported checkpoint version: " + path);
  return r.str();
}

std::unique_ptr<AVHubert32> load_model(const std::string &path) {
  ModelConfig mc = ModelConfig::from_json(peek_checkpoint_config(path));
  auto m = std::make_unique<AVHubert32>(mc, 0);
  auto ps = m->params();
  load_checkpoint<float>(path, ps);
  return m;
}

void save_model(const AVHubert32 &m, const std::string &path) {
  std::vector<const ParamT<float> *> cp = m.params();
  save_checkpoint<float>(path, m.config().to_json(), cp);
}

Modality parse_mode_flag(const std::string &s) {
  if (s == "AV") return Modality::AV;
  if (s == "A") return Modality::A;
  if (s == "V") return Modality::V;
  throw ConfigError("--mode must be AV, A or V (got '" + s + "')");
}

// Per-utterance decode over the test split, persisted for report assembly.
double decode_split(const CorpusData &data, AVHubert32 &model, Modality mode,
                    const std::string &out_dir) {
  std::vector<DecodeRow> rows;
  long edits = 0, ref_words = 0;
  for (int i : data.test) {
    const LoadedUtterance &lu = data.utts[size_t(i)];
    std::vector<uint16_t> words = phones_to_words(decode_phones(model, lu, mode), data.inv);
    DecodeRow r;
    r.utt = "utt_" + std::to_string(i);
    r.ref_len = int(lu.word_seq.size());
    r.edits = edit_distance(words, lu.word_seq);
    rows.push_back(r);
    edits += r.edits;
    ref_words += r.ref_len;
  }
  double w = double(edits) / double(ref_words);
  save_decode_rows(rows, w, out_dir);
  return w;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"audio-visual self-supervised learning pipeline"};
  app.require_subcommand(1);

  std::string config_path, out_dir, corpus_dir, ckpt_path, self_train_from, label_mode_str;
  std::string variant_str = "AV/MFCC->AV", mode_str, feature = "mfcc", precision = "f32";
  uint64_t seed = 0;
  bool seed_given = false;
  int workers = 1, layer = 0, K = 0;

  app.add_option("--workers", workers, "worker count (only 1 is bit-reproducible)")
      ->check(CLI::PositiveNumber);
  app.add_option("--precision", precision, "f32 | f64")
      ->check(CLI::IsMember({"f32", "f64"}));

  auto add_common = [&](CLI::App *cmd, bool need_out) {
    cmd->add_option("-c,--config", config_path, "experiment config JSON")->required();
    auto *o = cmd->add_option("-o,--out", out_dir, "output directory");
    if (need_out) o->required();
    cmd->add_option("--seed", seed, "root seed (overrides config)")
        ->each([&](const std::string &) { seed_given = true; });
  };

  auto *gen = app.add_subcommand("gen-corpus", "synthesize an audio-visual corpus");
  add_common(gen, true);

  auto *pre = app.add_subcommand("pretrain", "iterative cluster/predict pretraining");
  add_common(pre, true);
  pre->add_option("--variant", variant_str, "e.g. AV/MFCC->AV, V/HoG->V, A/MFCC->A");
  pre->add_option("--corpus", corpus_dir, "corpus directory (overrides config paths)");

  auto *cev = app.add_subcommand("cluster-eval", "purity/NMI of a clustering");
  add_common(cev, false);
  cev->add_option("--corpus", corpus_dir, "corpus directory (overrides config paths)");
  cev->add_option("--checkpoint", ckpt_path, "cluster model-layer features of this checkpoint");
  cev->add_option("--layer", layer, "1-based layer for model features");
  cev->add_option("--feature", feature, "signal feature when no checkpoint: mfcc | hog");
  cev->add_option("--mode", mode_str, "modality branch for model features: AV | A | V");
  cev->add_option("-K,--clusters", K, "codebook size (default: config k_schedule[0])");

  auto *ft = app.add_subcommand("finetune", "CTC fine-tuning (+ optional self-training)");
  add_common(ft, true);
  ft->add_option("--corpus", corpus_dir, "corpus directory (overrides config paths)");
  ft->add_option("--checkpoint", ckpt_path, "pretrained checkpoint (omit for scratch)");
  ft->add_option("--mode", mode_str, "input modality: AV | A | V (default: config)");
  ft->add_option("--self-train-from", self_train_from,
                 "fine-tuned checkpoint that pseudo-labels the pretrain split");
  ft->add_option("--label-mode", label_mode_str,
                 "modality the labeling model uses: AV | A | V (default: --mode)");

  auto *dec = app.add_subcommand("decode", "decode the test split and report WER");
  add_common(dec, true);
  dec->add_option("--corpus", corpus_dir, "corpus directory (overrides config paths)");
  dec->add_option("--checkpoint", ckpt_path, "fine-tuned checkpoint")->required();
  dec->add_option("--mode", mode_str, "input modality: AV | A | V (default: config)");

  auto *rep = app.add_subcommand("report", "assemble CSV tables from run directories");
  rep->add_option("-o,--out", out_dir, "output directory")->required();
  std::vector<std::string> run_dirs;
  rep->add_option("runs", run_dirs, "run directories")->required();

  auto *self = app.add_subcommand("selftest", "run the exact oracle suites");
  self->add_option("--seed", seed, "oracle seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(self)) {
      bool all = true;
      for (const OracleResult &r : run_all_oracles(seed ? seed : 1)) {
        std::printf("[oracle] %-22s %s  (%s)\n", r.name.c_str(), r.pass ? "PASS" : "FAIL",
                    r.detail.c_str());
        all = all && r.pass;
      }
      return all ? 0 : 1;
    }
    if (app.got_subcommand(rep)) {
      ReportPaths p = report(run_dirs, out_dir);
      std::printf("wrote %s\n      %s\n      %s\n", p.iterations_csv.c_str(),
                  p.variants_csv.c_str(), p.wer_by_length_csv.c_str());
      return 0;
    }

    ExperimentConfig cfg = ExperimentConfig::load(config_path);
    if (seed_given) cfg.seed = seed;
    if (!corpus_dir.empty()) cfg.paths.corpus_dir = corpus_dir;
    if (!out_dir.empty()) cfg.paths.out_dir = out_dir;
    if (precision == "f64" && !app.got_subcommand(self))
      throw ConfigError("--precision f64 applies to selftest oracles; training runs at f32");
    if (workers != 1)
      std::fprintf(stderr, "note: --workers %d requested; running single-threaded for "
                   "bit-reproducibility\n", workers);

    if (app.got_subcommand(gen)) {
      fs::create_directories(out_dir);
      CorpusManifest m = gen_corpus(cfg.corpus_config(cfg.seed), mix_seed(cfg.seed, "corpus"),
                                    out_dir);
      cfg.save((fs::path(out_dir) / "config.json").string());
      std::printf("wrote %zu utterances to %s\n", m.records.size(), out_dir.c_str());
      return 0;
    }

    if (cfg.paths.corpus_dir.empty())
      throw ConfigError("no corpus directory (set paths.corpus_dir or pass --corpus)");
    CorpusData data = load_corpus(cfg.paths.corpus_dir);

    if (app.got_subcommand(pre)) {
      fs::create_directories(out_dir);
      Variant v = parse_variant(variant_str);
      IterativeOutcome io = iterative_pretrain(data, v, cfg.iteration_plan(),
                                               cfg.model_config(), out_dir,
                                               mix_seed(cfg.seed, "pretrain"));
      cfg.save((fs::path(out_dir) / "config.json").string());
      for (const IterationRecord &ir : io.record.iterations)
        std::printf("iter %d  K=%-3d layer=%d  purity %.4f  nmi %.4f  val_loss %.4f\n",
                    ir.iteration, ir.K, ir.layer, ir.purity, ir.nmi, ir.val_loss);
      return 0;
    }

    if (app.got_subcommand(cev)) {
      int k = K > 0 ? K : cfg.training.k_schedule.front();
      TargetSet ts;
      if (!ckpt_path.empty()) {
        auto model = load_model(ckpt_path);
        int l = layer > 0 ? layer : model->config().layers;
        Modality m = mode_str.empty() ? Modality::AV : parse_mode_flag(mode_str);
        ts = make_model_targets(data, *model, m, l, k, mix_seed(cfg.seed, "cluster-eval"),
                                "model-layer" + std::to_string(l));
      } else {
        ts = make_signal_targets(data, feature, k, mix_seed(cfg.seed, "cluster-eval"));
      }
      std::printf("source=%s K=%d purity %.4f nmi %.4f\n", ts.source.c_str(), ts.K,
                  ts.purity_vs_labels, ts.nmi_vs_labels);
      if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream os(fs::path(out_dir) / "cluster_eval.json");
        os << "{\"source\": \"" << ts.source << "\", \"K\": " << ts.K
           << ", \"purity\": " << ts.purity_vs_labels << ", \"nmi\": " << ts.nmi_vs_labels
           << "}\n";
      }
      return 0;
    }

    if (app.got_subcommand(ft)) {
      fs::create_directories(out_dir);
      Modality mode = mode_str.empty() ? cfg.finetune_mode() : parse_mode_flag(mode_str);
      std::unique_ptr<AVHubert32> init;
      if (!ckpt_path.empty()) init = load_model(ckpt_path);
      FinetuneOutcome fo;
      if (!self_train_from.empty()) {
        if (!init) throw ConfigError("--self-train-from requires a pretrained --checkpoint");
        auto teacher = load_model(self_train_from);
        std::optional<Modality> label_mode;
        if (!label_mode_str.empty()) label_mode = parse_mode_flag(label_mode_str);
        fo = self_train(data, *teacher, *init, mode, data.pretrain, cfg.finetune_settings(),
                        mix_seed(cfg.seed, "finetune"), label_mode);
      } else {
        fo = finetune(data, init.get(), cfg.model_config(), mode, cfg.finetune_settings(),
                      mix_seed(cfg.seed, "finetune"));
      }
      std::string out_ckpt = (fs::path(out_dir) / "finetuned.avp").string();
      save_model(*fo.model, out_ckpt);
      double w = decode_split(data, *fo.model, mode, out_dir);
      cfg.save((fs::path(out_dir) / "config.json").string());
      std::printf("mode=%s val_ctc %.4f test WER %.4f  -> %s\n",
                  modality_name(mode).c_str(), fo.best_val_loss, w, out_ckpt.c_str());
      return 0;
    }

    if (app.got_subcommand(dec)) {
      fs::create_directories(out_dir);
      Modality mode = mode_str.empty() ? cfg.finetune_mode() : parse_mode_flag(mode_str);
      auto model = load_model(ckpt_path);
      double w = decode_split(data, *model, mode, out_dir);
      std::printf("mode=%s test WER %.4f\n", modality_name(mode).c_str(), w);
      return 0;
    }

    throw ConfigError("no subcommand executed");
  } catch (const ConfigError &e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
