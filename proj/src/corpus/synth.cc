// corpus/synth.cc

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

#include "corpus/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "util/binio.hpp"
#include "util/rng.hpp"

namespace avlearn {

namespace fs = std::filesystem;
using nlohmann::json;

Mat render_mouth(int viseme_id, int n_visemes, int image_size, float brightness_offset,
                 float pixel_sigma, std::mt19937_64 *rng) {
  const int S = image_size;
  Mat img(S, S);
  // Opening grows with the viseme id; width follows a decorrelated ordering
  // so adjacent visemes differ in shape along two axes.
  const float opening = 0.1f + 0.8f * float(viseme_id) / float(n_visemes - 1);
  const int width_rank = (viseme_id * 5 + 2) % n_visemes;
  const float width = 0.5f + 0.45f * float(width_rank) / float(n_visemes - 1);
  const float cx = (S - 1) * 0.5f, cy = (S - 1) * 0.5f;
  const float a = 0.48f * S * width;    // horizontal semi-axis
  const float b = 0.48f * S * opening;  // vertical semi-axis

  std::normal_distribution<float> noise(0.0f, pixel_sigma);
  for (int y = 0; y < S; ++y) {
    for (int x = 0; x < S; ++x) {
      float dx = (x - cx) / a, dy = (y - cy) / b;
      float v = (dx * dx + dy * dy <= 1.0f) ? 0.15f : 0.75f;
      v += brightness_offset;
      if (rng) v += noise(*rng);
      img.at(y, x) = std::clamp(v, 0.0f, 1.0f);
    }
  }
  return img;
}

Utterance synth_utterance(const PhoneInventory &inv, const std::vector<uint16_t> &word_seq,
                          int speaker_id, uint64_t seed, const SynthConfig &cfg) {
  if (word_seq.empty()) throw ParamError("synth_utterance: empty word sequence");
  for (uint16_t w : word_seq)
    if (w >= inv.words.size()) throw ParamError("synth_utterance: unknown word id");

  auto rng = make_rng(seed, "utterance");
  auto spk_rng = make_rng(uint64_t(speaker_id), "speaker");
  std::uniform_real_distribution<float> unit(-1.0f, 1.0f);
  const float brightness = cfg.speaker_brightness * unit(spk_rng);

  Utterance u;
  u.word_seq = word_seq;
  u.speaker_id = speaker_id;

  std::normal_distribution<float> anoise(0.0f, cfg.noise_sigma);
  std::uniform_real_distribution<float> phase(0.0f, 2.0f * float(M_PI));

  for (uint16_t w : word_seq) {
    for (int pid : inv.words[w]) {
      const PhoneDesc &ph = inv.phones[pid];
      std::uniform_int_distribution<int> dur(ph.dur_min, ph.dur_max);
      const int dv = dur(rng);
      const float ph1 = phase(rng), ph2 = phase(rng);
      const int n0 = int(u.wave.size());
      for (int i = 0; i < dv * kSamplesPerVideoFrame; ++i) {
        float t = float(n0 + i - n0) / kSampleRate;
        float s = 0.35f * std::sin(2.0f * float(M_PI) * ph.formant1_hz * t + ph1) +
                  0.35f * std::sin(2.0f * float(M_PI) * ph.formant2_hz * t + ph2) + anoise(rng);
        u.wave.push_back(s);
      }
      for (int f = 0; f < dv; ++f) {
        u.frames.push_back(render_mouth(ph.viseme_id, inv.n_visemes, cfg.image_size, brightness,
                                        cfg.pixel_sigma, cfg.pixel_sigma > 0 ? &rng : nullptr));
        u.phone_labels.push_back(uint16_t(pid));
      }
    }
  }
  u.T = int(u.frames.size());
  return u;
}

void save_utterance(const Utterance &u, const std::string &path) {
  BinWriter w(path);
  w.magic("AVU1");
  w.u16(1);  // version
  w.u32(uint32_t(u.T));
  const int H = u.frames.empty() ? 0 : u.frames[0].rows;
  const int W = u.frames.empty() ? 0 : u.frames[0].cols;
  w.u16(uint16_t(H));
  w.u16(uint16_t(W));
  for (const Mat &f : u.frames) w.f32v(f.d);
  w.f32v(u.wave);
  w.u16v(u.phone_labels);
  w.u16(uint16_t(u.word_seq.size()));
  w.u16v(u.word_seq);
  w.close();
}

Utterance load_utterance(const std::string &path) {
  BinReader r(path);
  r.expect_magic("AVU1");
  uint16_t version = r.u16();
  if (version != 1) throw FormatError("unsupported utterance version in " + path);
  Utterance u;
  u.T = int(r.u32());
  int H = r.u16(), W = r.u16();
  if (u.T <= 0 || H <= 0 || W <= 0) throw FormatError("bad header in " + path);
  for (int t = 0; t < u.T; ++t) {
    Mat f(H, W);
    f.d = r.f32v(size_t(H) * W);
    u.frames.push_back(std::move(f));
  }
  u.wave = r.f32v(size_t(u.T) * kSamplesPerVideoFrame);
  u.phone_labels = r.u16v(size_t(u.T));
  uint16_t nw = r.u16();
  u.word_seq = r.u16v(nw);
  if (!r.at_eof()) throw FormatError("trailing bytes in " + path);
  return u;
}

std::vector<const CorpusRecord *> CorpusManifest::split(const std::string &name) const {
  std::vector<const CorpusRecord *> out;
  for (const auto &r : records)
    if (r.split == name) out.push_back(&r);
  return out;
}

static std::string hash_config(const CorpusConfig &cfg, uint64_t seed) {
  std::string s;
  s += std::to_string(cfg.n_pretrain) + "," + std::to_string(cfg.n_labeled) + ",";
  s += std::to_string(cfg.n_validation) + "," + std::to_string(cfg.n_test) + ",";
  s += std::to_string(cfg.min_words) + "," + std::to_string(cfg.max_words) + ",";
  s += std::to_string(cfg.inventory.n_phones()) + "," + std::to_string(cfg.inventory.n_visemes) + ",";
  s += std::to_string(cfg.synth.image_size) + "," + std::to_string(cfg.synth.noise_sigma) + ",";
  s += std::to_string(seed);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)mix_seed(seed, s));
  return std::string(buf);
}

CorpusManifest gen_corpus(const CorpusConfig &cfg, uint64_t seed, const std::string &out_dir) {
  if (cfg.inventory.n_words() < 2) throw ParamError("gen_corpus: inventory has no lexicon");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw IoError("cannot create output dir: " + out_dir);

  CorpusManifest m;
  m.seed = seed;
  m.config_hash = hash_config(cfg, seed);

  const std::pair<const char *, int> splits[] = {{"pretrain", cfg.n_pretrain},
                                                 {"labeled", cfg.n_labeled},
                                                 {"validation", cfg.n_validation},
                                                 {"test", cfg.n_test}};
  auto rng = make_rng(seed, "corpus");
  std::uniform_int_distribution<int> n_words_dist(cfg.min_words, cfg.max_words);
  std::uniform_int_distribution<int> word_dist(0, cfg.inventory.n_words() - 1);
  std::uniform_int_distribution<int> spk_dist(0, cfg.synth.n_speakers - 1);

  int index = 0;
  for (auto [split, count] : splits) {
    for (int i = 0; i < count; ++i, ++index) {
      std::vector<uint16_t> words;
      int nw = n_words_dist(rng);
      for (int j = 0; j < nw; ++j) words.push_back(uint16_t(word_dist(rng)));
      int speaker = spk_dist(rng);
      uint64_t utt_seed = mix_seed(seed, "utt-" + std::to_string(index));
      Utterance u = synth_utterance(cfg.inventory, words, speaker, utt_seed, cfg.synth);

      char name[32];
      std::snprintf(name, sizeof name, "utt_%05d.avu", index);
      save_utterance(u, (fs::path(out_dir) / name).string());

      CorpusRecord rec;
      rec.path = name;  // manifest-relative, so the corpus directory can move
      rec.split = split;
      rec.T = u.T;
      rec.speaker = speaker;
      rec.words = words;
      m.records.push_back(std::move(rec));
    }
  }
  save_manifest(m, (fs::path(out_dir) / "manifest.json").string());
  save_inventory(cfg.inventory, (fs::path(out_dir) / "inventory.json").string());
  return m;
}

void save_manifest(const CorpusManifest &m, const std::string &path) {
  json j;
  j["seed"] = m.seed;
  j["config_hash"] = m.config_hash;
  j["records"] = json::array();
  for (const auto &r : m.records) {
    j["records"].push_back({{"path", r.path},
                            {"split", r.split},
                            {"T", r.T},
                            {"speaker", r.speaker},
                            {"words", r.words}});
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path);
  out << j.dump(1) << "\n";
}

CorpusManifest load_manifest(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read manifest: " + path);
  json j = json::parse(in, nullptr, true);
  CorpusManifest m;
  m.seed = j.at("seed").get<uint64_t>();
  m.config_hash = j.at("config_hash").get<std::string>();
  for (const auto &rj : j.at("records")) {
    CorpusRecord r;
    r.path = rj.at("path").get<std::string>();
    r.split = rj.at("split").get<std::string>();
    r.T = rj.at("T").get<int>();
    r.speaker = rj.at("speaker").get<int>();
    r.words = rj.at("words").get<std::vector<uint16_t>>();
    m.records.push_back(std::move(r));
  }
  return m;
}

}  // namespace avlearn
