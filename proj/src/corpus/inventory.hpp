// corpus/inventory.hpp

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

#ifndef AVLEARN_CORPUS_INVENTORY_HPP
#define AVLEARN_CORPUS_INVENTORY_HPP

#include <cstdint>
#include <vector>

#include "util/common.hpp"

namespace avlearn {

struct PhoneDesc {
  int id = 0;
  float formant1_hz = 0.0f;  // the two sinusoid frequencies of this phone
  float formant2_hz = 0.0f;
  int viseme_id = 0;         // mouth-shape class; several phones may share one
  int dur_min = 2;           // duration range in video frames, within [2, 6]
  int dur_max = 6;
};

// Phone set, viseme map and a small lexicon of 2-3 phone words. The viseme
// map is surjective and has at least one collision, so some phones are
// indistinguishable from video alone while their audio renders differ.
struct PhoneInventory {
  std::vector<PhoneDesc> phones;
  int n_visemes = 0;
  std::vector<std::vector<int>> words;  // word id -> phone id sequence

  int n_phones() const { return int(phones.size()); }
  int n_words() const { return int(words.size()); }
};

PhoneInventory build_inventory(int n_phones, int n_visemes, int n_words, uint64_t seed);

void save_inventory(const PhoneInventory &inv, const std::string &path);
PhoneInventory load_inventory(const std::string &path);

}  // namespace avlearn

#endif  // AVLEARN_CORPUS_INVENTORY_HPP
