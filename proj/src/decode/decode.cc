// decode/decode.cc

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

#include "decode/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "model/ctc.hpp"

namespace avlearn {

std::vector<uint16_t> greedy_decode(const Mat &log_probs) {
  const int blank = log_probs.cols - 1;
  std::vector<uint16_t> out;
  int prev = blank;
  for (int t = 0; t < log_probs.rows; ++t) {
    int best = 0;
    for (int c = 1; c < log_probs.cols; ++c)
      if (log_probs.at(t, c) > log_probs.at(t, best)) best = c;
    if (best != blank && best != prev) out.push_back(uint16_t(best));
    prev = best;
  }
  return out;
}

Hypothesis beam_decode(const Mat &log_probs, int beam_width) {
  if (beam_width < 1) throw ParamError("beam_decode: beam_width must be >= 1");
  const int T = log_probs.rows, blank = log_probs.cols - 1;

  // prefix -> (log p ending in blank, log p ending in non-blank)
  using Probs = std::pair<double, double>;
  std::map<std::vector<uint16_t>, Probs> beam;
  beam[{}] = {0.0, kLogZero};

  for (int t = 0; t < T; ++t) {
    std::map<std::vector<uint16_t>, Probs> next;
    auto acc = [&next](const std::vector<uint16_t> &pfx, double pb, double pnb) {
      auto it = next.find(pfx);
      if (it == next.end())
        next.emplace(pfx, Probs{pb, pnb});
      else {
        it->second.first = log_add(it->second.first, pb);
        it->second.second = log_add(it->second.second, pnb);
      }
    };
    for (const auto &[pfx, p] : beam) {
      const auto [pb, pnb] = p;
      const double total = log_add(pb, pnb);
      // Stay on blank.
      acc(pfx, total + log_probs.at(t, blank), kLogZero);
      for (int c = 0; c < blank; ++c) {
        const double yc = log_probs.at(t, c);
        if (!pfx.empty() && pfx.back() == c) {
          // Same symbol again without a blank merges into the prefix.
          acc(pfx, kLogZero, pnb + yc);
          // Extension requires an intervening blank.
          auto ext = pfx;
          ext.push_back(uint16_t(c));
          acc(ext, kLogZero, pb + yc);
        } else {
          auto ext = pfx;
          ext.push_back(uint16_t(c));
          acc(ext, kLogZero, total + yc);
        }
      }
    }
    if (int(next.size()) > beam_width) {
      std::vector<std::pair<double, const std::vector<uint16_t> *>> ranked;
      for (const auto &[pfx, p] : next) ranked.push_back({log_add(p.first, p.second), &pfx});
      std::nth_element(ranked.begin(), ranked.begin() + beam_width, ranked.end(),
                       [](const auto &a, const auto &b) { return a.first > b.first; });
      std::map<std::vector<uint16_t>, Probs> pruned;
      for (int i = 0; i < beam_width; ++i) pruned.emplace(*ranked[size_t(i)].second, next[*ranked[size_t(i)].second]);
      next = std::move(pruned);
    }
    beam = std::move(next);
  }

  Hypothesis best;
  best.score = kLogZero;
  for (const auto &[pfx, p] : beam) {
    double total = log_add(p.first, p.second);
    if (total > best.score) {
      best.score = total;
      best.tokens = pfx;
    }
  }
  return best;
}

int edit_distance(const std::vector<uint16_t> &hyp, const std::vector<uint16_t> &ref) {
  const size_t n = hyp.size(), m = ref.size();
  std::vector<int> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = int(j);
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = int(i);
    for (size_t j = 1; j <= m; ++j) {
      int sub = prev[j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double wer(const std::vector<uint16_t> &hyp, const std::vector<uint16_t> &ref) {
  if (ref.empty()) throw ParamError("wer: empty reference");
  return double(edit_distance(hyp, ref)) / double(ref.size());
}

std::vector<uint16_t> phones_to_words(const std::vector<uint16_t> &phones,
                                      const PhoneInventory &inv) {
  std::vector<uint16_t> words;
  size_t i = 0;
  while (i < phones.size()) {
    int best_word = -1;
    size_t best_len = 0;
    for (int w = 0; w < inv.n_words(); ++w) {
      const auto &seq = inv.words[size_t(w)];
      if (seq.size() <= best_len || i + seq.size() > phones.size()) continue;
      bool match = true;
      for (size_t j = 0; j < seq.size(); ++j)
        if (phones[i + j] != seq[j]) {
          match = false;
          break;
        }
      if (match) {
        best_word = w;
        best_len = seq.size();
      }
    }
    if (best_word >= 0) {
      words.push_back(uint16_t(best_word));
      i += best_len;
    } else {
      words.push_back(kUnsegmentable);
      ++i;
    }
  }
  return words;
}

}  // namespace avlearn
