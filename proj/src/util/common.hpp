// util/common.hpp

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

#ifndef AVLEARN_UTIL_COMMON_HPP
#define AVLEARN_UTIL_COMMON_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace avlearn {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad argument values (counts, probabilities, out of range indices).
struct ParamError : Error {
  using Error::Error;
};

// Malformed on-disk containers (bad magic, truncation, length mismatch).
struct FormatError : Error {
  using Error::Error;
};

// Incompatible tensor/matrix shapes; message carries both shapes.
struct ShapeError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// Empty substitution-offset domain and similar mask sampling failures.
struct MaskError : Error {
  using Error::Error;
};

// Degenerate loss instances (empty contributing set, infeasible CTC target).
struct LossError : Error {
  using Error::Error;
};

// Row-major float matrix used for features, pixels and logits outside the
// autodiff tape.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<float> d;

  Mat() = default;
  Mat(int r, int c, float fill = 0.0f) : rows(r), cols(c), d(size_t(r) * c, fill) {}

  float &at(int r, int c) { return d[size_t(r) * cols + c]; }
  float at(int r, int c) const { return d[size_t(r) * cols + c]; }
  float *row(int r) { return d.data() + size_t(r) * cols; }
  const float *row(int r) const { return d.data() + size_t(r) * cols; }

  bool operator==(const Mat &o) const {
    return rows == o.rows && cols == o.cols && d == o.d;
  }
};

}  // namespace avlearn

#endif  // AVLEARN_UTIL_COMMON_HPP
