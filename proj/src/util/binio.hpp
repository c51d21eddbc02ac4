// util/binio.hpp

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

#ifndef AVLEARN_UTIL_BINIO_HPP
#define AVLEARN_UTIL_BINIO_HPP

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "util/common.hpp"

namespace avlearn {

// Little-endian binary container helpers. All on-disk formats here are
// little-endian; this code assumes a little-endian host.

class BinWriter {
 public:
  explicit BinWriter(const std::string &path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open for writing: " + path);
  }

  void magic(const char m[4]) { out_.write(m, 4); }
  void u16(uint16_t v) { raw(&v, sizeof v); }
  void u32(uint32_t v) { raw(&v, sizeof v); }
  void u64(uint64_t v) { raw(&v, sizeof v); }
  void f32(float v) { raw(&v, sizeof v); }
  void f32v(const std::vector<float> &v) { raw(v.data(), v.size() * sizeof(float)); }
  void u16v(const std::vector<uint16_t> &v) { raw(v.data(), v.size() * sizeof(uint16_t)); }
  void str(const std::string &s) {
    u32(uint32_t(s.size()));
    raw(s.data(), s.size());
  }

  void close() {
    out_.close();
    if (!out_) throw IoError("write failed: " + path_);
  }

 private:
  void raw(const void *p, size_t n) { out_.write(static_cast<const char *>(p), std::streamsize(n)); }
  std::string path_;
  std::ofstream out_;
};

class BinReader {
 public:
  explicit BinReader(const std::string &path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open for reading: " + path);
  }

  void expect_magic(const char m[4]) {
    char got[4] = {0, 0, 0, 0};
    raw(got, 4);
    if (std::memcmp(got, m, 4) != 0)
      throw FormatError("bad magic in " + path_ + " (expected " + std::string(m, 4) + ")");
  }
  uint16_t u16() { uint16_t v; raw(&v, sizeof v); return v; }
  uint32_t u32() { uint32_t v; raw(&v, sizeof v); return v; }
  uint64_t u64() { uint64_t v; raw(&v, sizeof v); return v; }
  float f32() { float v; raw(&v, sizeof v); return v; }
  std::vector<float> f32v(size_t n) {
    std::vector<float> v(n);
    raw(v.data(), n * sizeof(float));
    return v;
  }
  std::vector<uint16_t> u16v(size_t n) {
    std::vector<uint16_t> v(n);
    raw(v.data(), n * sizeof(uint16_t));
    return v;
  }
  std::string str() {
    uint32_t n = u32();
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  bool at_eof() {
    in_.peek();
    return in_.eof();
  }

 private:
  void raw(void *p, size_t n) {
    in_.read(static_cast<char *>(p), std::streamsize(n));
    if (size_t(in_.gcount()) != n) throw FormatError("truncated file: " + path_);
  }
  std::string path_;
  std::ifstream in_;
};

}  // namespace avlearn

#endif  // AVLEARN_UTIL_BINIO_HPP
