// decode/decode.hpp

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

#ifndef AVLEARN_DECODE_DECODE_HPP
#define AVLEARN_DECODE_DECODE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "corpus/inventory.hpp"
#include "util/common.hpp"

namespace avlearn {

struct Hypothesis {
  std::vector<uint16_t> tokens;
  double score = 0.0;  // log probability
};

// Per-frame argmax, collapse repeats, drop blanks (blank = last column).
std::vector<uint16_t> greedy_decode(const Mat &log_probs);

// Prefix beam search over collapsed labelings with blank/non-blank
// probability bookkeeping. No language model.
Hypothesis beam_decode(const Mat &log_probs, int beam_width);

// Levenshtein (substitution + insertion + deletion, unit costs) divided by
// reference length.
double wer(const std::vector<uint16_t> &hyp, const std::vector<uint16_t> &ref);

// Edit distance alone, for corpus-level aggregation.
int edit_distance(const std::vector<uint16_t> &hyp, const std::vector<uint16_t> &ref);

// Greedy longest-match segmentation of a decoded phone sequence against the
// lexicon. Unsegmentable phones each become a single error token (id 0xFFFF)
// so they count as one word error apiece.
constexpr uint16_t kUnsegmentable = 0xFFFF;
std::vector<uint16_t> phones_to_words(const std::vector<uint16_t> &phones,
                                      const PhoneInventory &inv);

}  // namespace avlearn

#endif  // AVLEARN_DECODE_DECODE_HPP
