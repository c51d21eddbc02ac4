// tests/test_corpus.cc

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>

#include "corpus/inventory.hpp"
#include "corpus/synth.hpp"

using namespace avlearn;
namespace fs = std::filesystem;

static fs::path tmpdir(const std::string &name) {
  fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST_CASE("inventory respects counts and collision guarantees") {
  PhoneInventory inv = build_inventory(12, 8, 40, 7);
  CHECK(inv.n_phones() == 12);
  CHECK(inv.n_visemes == 8);
  CHECK(inv.n_words() == 40);
  // Viseme map is surjective.
  std::set<int> seen;
  for (const auto &p : inv.phones) seen.insert(p.viseme_id);
  CHECK(int(seen.size()) == 8);
  // Pigeonhole: 12 phones into 8 visemes leaves at least 4 phones sharing.
  int sharing = 0;
  for (const auto &p : inv.phones) {
    int same = 0;
    for (const auto &q : inv.phones)
      if (q.viseme_id == p.viseme_id) ++same;
    if (same >= 2) ++sharing;
  }
  CHECK(sharing >= 4);
  // Formant pairs distinct across phones; durations within [2, 6].
  for (size_t i = 0; i < inv.phones.size(); ++i) {
    CHECK(inv.phones[i].dur_min >= 2);
    CHECK(inv.phones[i].dur_max <= 6);
    for (size_t j = i + 1; j < inv.phones.size(); ++j)
      CHECK((inv.phones[i].formant1_hz != inv.phones[j].formant1_hz ||
             inv.phones[i].formant2_hz != inv.phones[j].formant2_hz));
  }
  // Words are 2-3 phones with valid ids.
  for (const auto &w : inv.words) {
    CHECK(w.size() >= 2);
    CHECK(w.size() <= 3);
    for (int ph : w) CHECK(ph < 12);
  }
}

TEST_CASE("minimal inventory has exactly one shared viseme") {
  PhoneInventory inv = build_inventory(3, 2, 2, 0);
  int collisions = 0;
  for (int v = 0; v < 2; ++v) {
    int n = 0;
    for (const auto &p : inv.phones)
      if (p.viseme_id == v) ++n;
    if (n == 2) ++collisions;
  }
  CHECK(collisions == 1);
}

TEST_CASE("invalid inventory counts are rejected") {
  CHECK_THROWS_AS(build_inventory(5, 5, 2, 0), ParamError);
  CHECK_THROWS_AS(build_inventory(5, 1, 2, 0), ParamError);
  CHECK_THROWS_AS(build_inventory(31, 8, 2, 0), ParamError);
  CHECK_THROWS_AS(build_inventory(5, 3, 1, 0), ParamError);
}

TEST_CASE("utterance synthesis is deterministic and rate-consistent") {
  PhoneInventory inv = build_inventory(6, 4, 8, 3);
  Utterance u1 = synth_utterance(inv, {0, 1, 2}, 5, 11);
  Utterance u2 = synth_utterance(inv, {0, 1, 2}, 5, 11);
  CHECK(u1 == u2);
  CHECK(int(u1.wave.size()) == 640 * u1.T);
  CHECK(int(u1.frames.size()) == u1.T);
  CHECK(int(u1.phone_labels.size()) == u1.T);
  for (const Mat &f : u1.frames)
    for (float px : f.d) {
      CHECK(px >= 0.0f);
      CHECK(px <= 1.0f);
    }
  CHECK_THROWS_AS(synth_utterance(inv, {}, 0, 0), ParamError);
  CHECK_THROWS_AS(synth_utterance(inv, {99}, 0, 0), ParamError);
}

TEST_CASE("homophemous phones render identical noise-free mouths") {
  PhoneInventory inv = build_inventory(3, 2, 2, 0);
  // Find the colliding pair.
  int p = -1, q = -1;
  for (int i = 0; i < 3 && p < 0; ++i)
    for (int j = i + 1; j < 3; ++j)
      if (inv.phones[i].viseme_id == inv.phones[j].viseme_id) {
        p = i;
        q = j;
        break;
      }
  REQUIRE(p >= 0);
  Mat a = render_mouth(inv.phones[p].viseme_id, 2, 16, 0.0f, 0.0f, nullptr);
  Mat b = render_mouth(inv.phones[q].viseme_id, 2, 16, 0.0f, 0.0f, nullptr);
  CHECK(a == b);
  CHECK(inv.phones[p].formant1_hz != inv.phones[q].formant1_hz);
}

TEST_CASE("distinct visemes render distinct mouths") {
  Mat a = render_mouth(0, 4, 16, 0.0f, 0.0f, nullptr);
  Mat b = render_mouth(3, 4, 16, 0.0f, 0.0f, nullptr);
  CHECK_FALSE(a == b);
}

TEST_CASE("utterance container round trips bit-exactly") {
  PhoneInventory inv = build_inventory(6, 4, 8, 3);
  Utterance u = synth_utterance(inv, {1, 3}, 2, 99);
  auto path = (fs::temp_directory_path() / "avlearn_utt_rt.avu").string();
  save_utterance(u, path);
  Utterance v = load_utterance(path);
  CHECK(u == v);
  fs::remove(path);
}

TEST_CASE("corrupted magic and length mismatch are format errors") {
  PhoneInventory inv = build_inventory(6, 4, 8, 3);
  Utterance u = synth_utterance(inv, {1, 3}, 2, 99);
  auto dir = tmpdir("avlearn_corpus_bad");
  auto path = (dir / "u.avu").string();

  save_utterance(u, path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
  }
  CHECK_THROWS_AS(load_utterance(path), FormatError);

  // Header claims one more frame than the payload holds.
  save_utterance(u, path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(6);
    uint32_t t = uint32_t(u.T + 1);
    f.write(reinterpret_cast<const char *>(&t), 4);
  }
  CHECK_THROWS_AS(load_utterance(path), FormatError);
  fs::remove_all(dir);
}

TEST_CASE("corpus generation writes disjoint splits and reproduces itself") {
  CorpusConfig cfg;
  cfg.n_pretrain = 10;
  cfg.n_labeled = 4;
  cfg.n_validation = 2;
  cfg.n_test = 4;
  cfg.inventory = build_inventory(6, 4, 8, 3);

  auto d1 = tmpdir("avlearn_corpus_g1");
  auto d2 = tmpdir("avlearn_corpus_g2");
  CorpusManifest m1 = gen_corpus(cfg, 5, d1.string());
  CorpusManifest m2 = gen_corpus(cfg, 5, d2.string());

  CHECK(m1.records.size() == 20);
  CHECK(m1.split("pretrain").size() == 10);
  CHECK(m1.split("labeled").size() == 4);
  CHECK(m1.split("validation").size() == 2);
  CHECK(m1.split("test").size() == 4);

  std::set<std::string> paths;
  for (const auto &r : m1.records) {
    paths.insert(r.path);
    CHECK(fs::exists(d1 / r.path));
  }
  CHECK(paths.size() == m1.records.size());

  // Same seed, two runs: identical manifests.
  REQUIRE(m1.records.size() == m2.records.size());
  for (size_t i = 0; i < m1.records.size(); ++i) {
    CHECK(m1.records[i].path == m2.records[i].path);
    CHECK(m1.records[i].split == m2.records[i].split);
    CHECK(m1.records[i].T == m2.records[i].T);
    CHECK(m1.records[i].words == m2.records[i].words);
  }

  // Manifest serialization round trip.
  CorpusManifest m3 = load_manifest((d1 / "manifest.json").string());
  CHECK(m3.records.size() == m1.records.size());
  CHECK(m3.seed == m1.seed);
  for (size_t i = 0; i < m1.records.size(); ++i)
    CHECK(m3.records[i].path == m1.records[i].path);

  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("phone frame mass tracks lexicon frequency times mean duration") {
  // Words are drawn uniformly, so each phone's expected frame mass is
  // proportional to (occurrences in the lexicon) x (mean phone duration).
  // Pooling a few hundred utterances keeps the observed mass within +-20%
  // of that prediction.
  CorpusConfig cfg;
  cfg.n_pretrain = 500;
  cfg.n_labeled = 0;
  cfg.n_validation = 0;
  cfg.n_test = 0;
  cfg.inventory = build_inventory(8, 4, 24, 17);
  auto dir = tmpdir("avlearn_corpus_hist");
  CorpusManifest m = gen_corpus(cfg, 21, dir.string());

  std::vector<double> weight(8, 0.0);
  for (const auto &w : cfg.inventory.words)
    for (int p : w)
      weight[size_t(p)] +=
          0.5 * (cfg.inventory.phones[size_t(p)].dur_min + cfg.inventory.phones[size_t(p)].dur_max);
  double wsum = 0.0;
  for (double w : weight) wsum += w;

  std::vector<long> counts(8, 0);
  long total = 0;
  for (const auto &r : m.records) {
    Utterance u = load_utterance((dir / r.path).string());
    for (uint16_t ph : u.phone_labels) {
      ++counts[ph];
      ++total;
    }
  }
  for (size_t i = 0; i < 8; ++i) {
    const double expected = double(total) * weight[i] / wsum;
    CHECK(double(counts[i]) > 0.8 * expected);
    CHECK(double(counts[i]) < 1.2 * expected);
  }
  fs::remove_all(dir);
}

TEST_CASE("inventory serialization round trips") {
  PhoneInventory inv = build_inventory(7, 4, 9, 13);
  auto path = (fs::temp_directory_path() / "avlearn_inv_rt.json").string();
  save_inventory(inv, path);
  PhoneInventory in2 = load_inventory(path);
  CHECK(in2.n_phones() == inv.n_phones());
  CHECK(in2.n_visemes == inv.n_visemes);
  CHECK(in2.words == inv.words);
  for (int i = 0; i < inv.n_phones(); ++i) {
    CHECK(in2.phones[i].formant1_hz == inv.phones[i].formant1_hz);
    CHECK(in2.phones[i].formant2_hz == inv.phones[i].formant2_hz);
    CHECK(in2.phones[i].viseme_id == inv.phones[i].viseme_id);
    CHECK(in2.phones[i].dur_min == inv.phones[i].dur_min);
    CHECK(in2.phones[i].dur_max == inv.phones[i].dur_max);
  }
  fs::remove(path);
}
