// util/rng.hpp

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

#ifndef AVLEARN_UTIL_RNG_HPP
#define AVLEARN_UTIL_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace avlearn {

// All randomness flows from one root seed through named sub-streams, so a
// config change to e.g. masking leaves corpus generation untouched.
inline uint64_t mix_seed(uint64_t seed, std::string_view name) {
  // FNV-1a over the name, folded with the seed, then splitmix64 finalizer.
  uint64_t h = 14695981039346656037ull;
  for (char c : name) {
    h ^= uint8_t(c);
    h *= 1099511628211ull;
  }
  uint64_t z = seed + 0x9e3779b97f4a7c15ull + h;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(uint64_t seed, std::string_view stream) {
  return std::mt19937_64(mix_seed(seed, stream));
}

inline uint64_t mix_seed(uint64_t seed, std::string_view name, uint64_t index) {
  return mix_seed(mix_seed(seed, name) + index * 0x9e3779b97f4a7c15ull, name);
}

inline std::mt19937_64 make_rng(uint64_t seed, std::string_view stream, uint64_t index) {
  return std::mt19937_64(mix_seed(seed, stream, index));
}

}  // namespace avlearn

#endif  // AVLEARN_UTIL_RNG_HPP
