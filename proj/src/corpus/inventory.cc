// corpus/inventory.cc

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

#include "corpus/inventory.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "util/rng.hpp"

namespace avlearn {

PhoneInventory build_inventory(int n_phones, int n_visemes, int n_words, uint64_t seed) {
  if (n_visemes < 2 || n_visemes >= n_phones || n_phones > 30)
    throw ParamError("build_inventory: need 2 <= n_visemes < n_phones <= 30");
  if (n_words < 2) throw ParamError("build_inventory: need n_words >= 2");

  auto rng = make_rng(seed, "inventory");
  PhoneInventory inv;
  inv.n_visemes = n_visemes;

  // Formant grids with jitter; each phone gets a distinct (F1, F2) pair.
  // F2 order is shuffled relative to F1 so neighbors in one band are not
  // automatically neighbors in the other.
  std::vector<int> f2_order(n_phones);
  std::iota(f2_order.begin(), f2_order.end(), 0);
  std::shuffle(f2_order.begin(), f2_order.end(), rng);

  std::uniform_real_distribution<float> jitter(-0.2f, 0.2f);
  std::uniform_int_distribution<int> lo_dist(2, 3);
  std::uniform_int_distribution<int> hi_dist(5, 6);
  const float f1_lo = 300.0f, f1_hi = 1000.0f;
  const float f2_lo = 1400.0f, f2_hi = 3200.0f;
  const float f1_step = (f1_hi - f1_lo) / n_phones;
  const float f2_step = (f2_hi - f2_lo) / n_phones;

  for (int i = 0; i < n_phones; ++i) {
    PhoneDesc p;
    p.id = i;
    p.formant1_hz = f1_lo + (i + 0.5f + jitter(rng)) * f1_step;
    p.formant2_hz = f2_lo + (f2_order[i] + 0.5f + jitter(rng)) * f2_step;
    p.viseme_id = i % n_visemes;  // surjective; pigeonhole gives >=1 collision
    p.dur_min = lo_dist(rng);
    p.dur_max = hi_dist(rng);
    inv.phones.push_back(p);
  }

  // Lexicon of 2-3 phone words drawn from a shuffled round-robin cycle so
  // phone usage stays close to uniform across the lexicon.
  std::vector<int> cycle(n_phones);
  std::iota(cycle.begin(), cycle.end(), 0);
  std::shuffle(cycle.begin(), cycle.end(), rng);
  size_t cursor = 0;
  auto next_phone = [&]() {
    int p = cycle[cursor++];
    if (cursor == cycle.size()) {
      std::shuffle(cycle.begin(), cycle.end(), rng);
      cursor = 0;
    }
    return p;
  };
  for (int w = 0; w < n_words; ++w) {
    int len = 2 + (w % 2);
    std::vector<int> word;
    for (int j = 0; j < len; ++j) word.push_back(next_phone());
    inv.words.push_back(std::move(word));
  }
  return inv;
}

void save_inventory(const PhoneInventory &inv, const std::string &path) {
  nlohmann::json j;
  j["n_visemes"] = inv.n_visemes;
  for (const PhoneDesc &p : inv.phones)
    j["phones"].push_back({{"id", p.id},
                           {"f1", p.formant1_hz},
                           {"f2", p.formant2_hz},
                           {"viseme", p.viseme_id},
                           {"dur_min", p.dur_min},
                           {"dur_max", p.dur_max}});
  j["words"] = inv.words;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write inventory: " + path);
  out << j.dump(1) << "\n";
}

PhoneInventory load_inventory(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read inventory: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  PhoneInventory inv;
  inv.n_visemes = j.at("n_visemes");
  for (const auto &pj : j.at("phones")) {
    PhoneDesc p;
    p.id = pj.at("id");
    p.formant1_hz = pj.at("f1");
    p.formant2_hz = pj.at("f2");
    p.viseme_id = pj.at("viseme");
    p.dur_min = pj.at("dur_min");
    p.dur_max = pj.at("dur_max");
    inv.phones.push_back(p);
  }
  inv.words = j.at("words").get<std::vector<std::vector<int>>>();
  return inv;
}

}  // namespace avlearn
