// nn/checkpoint.hpp

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

#ifndef AVLEARN_NN_CHECKPOINT_HPP
#define AVLEARN_NN_CHECKPOINT_HPP

#include <string>
#include <vector>

#include "nn/tensor.hpp"
#include "util/binio.hpp"

namespace avlearn {

// "AVP1" named-parameter container: model config JSON in the header, f32
// parameter data, optional Adam state. Loading validates names and shapes
// against the receiving parameter set.

template <typename S>
void save_checkpoint(const std::string &path, const std::string &config_json,
                     const std::vector<const ParamT<S> *> &params, int64_t adam_step = -1) {
  BinWriter w(path);
  w.magic("AVP1");
  w.u16(1);
  w.str(config_json);
  w.u32(uint32_t(params.size()));
  for (const ParamT<S> *p : params) {
    w.str(p->name);
    w.u32(uint32_t(p->rows));
    w.u32(uint32_t(p->cols));
    std::vector<float> v(p->size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = float(p->value[i]);
    w.f32v(v);
  }
  const bool has_opt = adam_step >= 0;
  w.u16(has_opt ? 1 : 0);
  if (has_opt) {
    w.u64(uint64_t(adam_step));
    for (const ParamT<S> *p : params) {
      std::vector<float> m(p->size(), 0.0f), vv(p->size(), 0.0f);
      if (!p->adam_m.empty())
        for (size_t i = 0; i < p->size(); ++i) {
          m[i] = float(p->adam_m[i]);
          vv[i] = float(p->adam_v[i]);
        }
      w.f32v(m);
      w.f32v(vv);
    }
  }
  w.close();
}

struct CheckpointInfo {
  std::string config_json;
  int64_t adam_step = -1;  // -1 when no optimizer state present
};

template <typename S>
CheckpointInfo load_checkpoint(const std::string &path, std::vector<ParamT<S> *> &params) {
  BinReader r(path);
  r.expect_magic("AVP1");
  if (r.u16() != 1) throw FormatError("unsupported checkpoint version: " + path);
  CheckpointInfo info;
  info.config_json = r.str();
  uint32_t n = r.u32();
  if (n != params.size())
    throw FormatError("checkpoint parameter count mismatch in " + path + ": file has " +
                      std::to_string(n) + ", model has " + std::to_string(params.size()));
  for (ParamT<S> *p : params) {
    std::string name = r.str();
    uint32_t rows = r.u32(), cols = r.u32();
    if (name != p->name || int(rows) != p->rows || int(cols) != p->cols)
      throw FormatError("checkpoint mismatch at parameter '" + p->name + "' (file: '" + name +
                        "' [" + std::to_string(rows) + "x" + std::to_string(cols) + "])");
    std::vector<float> v = r.f32v(p->size());
    for (size_t i = 0; i < v.size(); ++i) p->value[i] = S(v[i]);
  }
  if (r.u16() == 1) {
    info.adam_step = int64_t(r.u64());
    for (ParamT<S> *p : params) {
      std::vector<float> m = r.f32v(p->size()), vv = r.f32v(p->size());
      p->adam_m.resize(p->size());
      p->adam_v.resize(p->size());
      for (size_t i = 0; i < p->size(); ++i) {
        p->adam_m[i] = S(m[i]);
        p->adam_v[i] = S(vv[i]);
      }
    }
  }
  return info;
}

}  // namespace avlearn

#endif  // AVLEARN_NN_CHECKPOINT_HPP
