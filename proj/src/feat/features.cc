// feat/features.cc

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

#include "feat/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>

#include "util/binio.hpp"

namespace avlearn {

namespace {

// Iterative radix-2 FFT, in place. kFftSize is a power of two.
void fft(std::vector<std::complex<float>> &a) {
  const int n = int(a.size());
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    float ang = -2.0f * float(M_PI) / len;
    std::complex<float> wl(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      std::complex<float> w(1.0f);
      for (int k = 0; k < len / 2; ++k) {
        std::complex<float> u = a[i + k], v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

float hz_to_mel(float hz) { return 2595.0f * std::log10(1.0f + hz / 700.0f); }
float mel_to_hz(float mel) { return 700.0f * (std::pow(10.0f, mel / 2595.0f) - 1.0f); }

// Triangular mel filterbank over FFT bins [0, kFftSize/2].
struct MelBank {
  // filters[m] = (first_bin, weights)
  std::vector<std::pair<int, std::vector<float>>> filters;
};

const MelBank &mel_bank(int sample_rate) {
  static std::map<int, MelBank> cache;
  auto it = cache.find(sample_rate);
  if (it != cache.end()) return it->second;

  MelBank bank;
  const float f_lo = 0.0f, f_hi = sample_rate / 2.0f;
  const float m_lo = hz_to_mel(f_lo), m_hi = hz_to_mel(f_hi);
  std::vector<float> edges_hz(kNumMel + 2);
  for (int i = 0; i < kNumMel + 2; ++i)
    edges_hz[i] = mel_to_hz(m_lo + (m_hi - m_lo) * i / (kNumMel + 1));

  const float bin_hz = float(sample_rate) / kFftSize;
  for (int m = 0; m < kNumMel; ++m) {
    float lo = edges_hz[m], mid = edges_hz[m + 1], hi = edges_hz[m + 2];
    int b0 = int(std::ceil(lo / bin_hz));
    std::vector<float> w;
    for (int b = b0; b * bin_hz <= hi && b <= kFftSize / 2; ++b) {
      float f = b * bin_hz;
      float v = (f <= mid) ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
      w.push_back(std::max(0.0f, v));
    }
    bank.filters.emplace_back(b0, std::move(w));
  }
  return cache.emplace(sample_rate, std::move(bank)).first->second;
}

// Log-mel spectrogram shared by logfbank and mfcc39.
Mat log_mel_frames(const std::vector<float> &wave, int sample_rate) {
  if (sample_rate != 16000) throw ParamError("features: sample rate must be 16000");
  if (wave.size() < kWinSamples) throw ParamError("features: wave shorter than one 25 ms window");

  const int T = fbank_num_frames(wave.size());
  const MelBank &bank = mel_bank(sample_rate);

  std::vector<float> window(kWinSamples);
  for (int i = 0; i < kWinSamples; ++i)
    window[i] = 0.5f - 0.5f * std::cos(2.0f * float(M_PI) * i / (kWinSamples - 1));

  Mat out(T, kNumMel);
  std::vector<std::complex<float>> buf(kFftSize);
  for (int t = 0; t < T; ++t) {
    const size_t off = size_t(t) * kHopSamples;
    for (int i = 0; i < kFftSize; ++i) {
      float s = (i < kWinSamples && off + i < wave.size()) ? wave[off + i] * window[i] : 0.0f;
      buf[i] = {s, 0.0f};
    }
    fft(buf);
    for (int m = 0; m < kNumMel; ++m) {
      const auto &[b0, w] = bank.filters[m];
      float e = 0.0f;
      for (size_t k = 0; k < w.size(); ++k) e += w[k] * std::norm(buf[b0 + int(k)]);
      out.at(t, m) = std::log(std::max(e, kLogFloor));
    }
  }
  return out;
}

}  // namespace

int fbank_num_frames(size_t n_samples) {
  return int((n_samples - kWinSamples + kHopSamples - 1) / kHopSamples) + 1;
}

FeatureSequence logfbank(const std::vector<float> &wave, int sample_rate) {
  FeatureSequence f;
  f.data = log_mel_frames(wave, sample_rate);
  f.rate = 100;
  f.kind = FeatureKind::Fbank26;
  return f;
}

FeatureSequence stack4(const FeatureSequence &fbank) {
  if (fbank.kind != FeatureKind::Fbank26) throw ParamError("stack4: input must be 26-d fbank");
  const int T_in = fbank.data.rows, D = fbank.data.cols;
  const int T_out = T_in / 4;
  FeatureSequence out;
  out.data = Mat(T_out, 4 * D);
  out.rate = 25;
  out.kind = FeatureKind::Fbank104;
  for (int t = 0; t < T_out; ++t)
    for (int j = 0; j < 4; ++j)
      std::copy_n(fbank.data.row(4 * t + j), D, out.data.row(t) + j * D);
  return out;
}

FeatureSequence mfcc39(const std::vector<float> &wave, int sample_rate) {
  Mat logmel = log_mel_frames(wave, sample_rate);
  const int T = logmel.rows, C = 13;

  // Orthonormal DCT-II, coefficients 0..12.
  Mat cep(T, C);
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < C; ++k) {
      float s = 0.0f;
      for (int m = 0; m < kNumMel; ++m)
        s += logmel.at(t, m) * std::cos(float(M_PI) * k * (m + 0.5f) / kNumMel);
      float scale = std::sqrt((k == 0 ? 1.0f : 2.0f) / kNumMel);
      cep.at(t, k) = scale * s;
    }
  }

  // Regression deltas: d_t = sum_n n (c_{t+n} - c_{t-n}) / (2 sum_n n^2),
  // n in {1, 2}, edges replicated.
  auto deltas = [T, C](const Mat &x) {
    Mat d(T, C);
    for (int t = 0; t < T; ++t) {
      for (int k = 0; k < C; ++k) {
        float num = 0.0f;
        for (int n = 1; n <= 2; ++n) {
          int tp = std::min(T - 1, t + n), tm = std::max(0, t - n);
          num += n * (x.at(tp, k) - x.at(tm, k));
        }
        d.at(t, k) = num / 10.0f;
      }
    }
    return d;
  };
  Mat d1 = deltas(cep), d2 = deltas(d1);

  FeatureSequence out;
  out.data = Mat(T, 3 * C);
  out.rate = 100;
  out.kind = FeatureKind::Mfcc39;
  for (int t = 0; t < T; ++t) {
    std::copy_n(cep.row(t), C, out.data.row(t));
    std::copy_n(d1.row(t), C, out.data.row(t) + C);
    std::copy_n(d2.row(t), C, out.data.row(t) + 2 * C);
  }
  return out;
}

FeatureSequence hog(const std::vector<Mat> &frames, const HogParams &p) {
  if (frames.empty()) throw ParamError("hog: no frames");
  const int H = frames[0].rows, W = frames[0].cols;
  if (H % p.cell != 0 || W % p.cell != 0)
    throw ParamError("hog: image size must be a multiple of the cell size");
  const int cy = H / p.cell, cx = W / p.cell;
  const int D = cy * cx * p.bins;

  FeatureSequence out;
  out.data = Mat(int(frames.size()), D);
  out.rate = 25;
  out.kind = FeatureKind::Hog;

  for (size_t t = 0; t < frames.size(); ++t) {
    const Mat &img = frames[t];
    if (img.rows != H || img.cols != W) throw ParamError("hog: inconsistent frame sizes");
    std::vector<float> desc(D, 0.0f);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        // Central differences with edge replication.
        float gx = img.at(y, std::min(W - 1, x + 1)) - img.at(y, std::max(0, x - 1));
        float gy = img.at(std::min(H - 1, y + 1), x) - img.at(std::max(0, y - 1), x);
        float mag = std::sqrt(gx * gx + gy * gy);
        if (mag == 0.0f) continue;
        float ang = std::atan2(gy, gx);  // unsigned orientation in [0, pi)
        if (ang < 0) ang += float(M_PI);
        if (ang >= float(M_PI)) ang -= float(M_PI);
        int bin = std::min(p.bins - 1, int(ang / float(M_PI) * p.bins));
        int cell = (y / p.cell) * cx + (x / p.cell);
        desc[size_t(cell) * p.bins + bin] += mag;
      }
    }
    // Per-cell L2 normalization, eps-guarded so flat cells stay zero.
    for (int c = 0; c < cy * cx; ++c) {
      float *v = desc.data() + size_t(c) * p.bins;
      float n2 = 0.0f;
      for (int b = 0; b < p.bins; ++b) n2 += v[b] * v[b];
      float inv = 1.0f / std::sqrt(n2 + p.eps * p.eps);
      for (int b = 0; b < p.bins; ++b) v[b] *= inv;
    }
    std::copy(desc.begin(), desc.end(), out.data.row(int(t)));
  }
  return out;
}

std::vector<uint16_t> align_labels_25hz(const std::vector<uint16_t> &assignments) {
  if (assignments.size() < 4) throw ParamError("align_labels_25hz: need at least 4 frames");
  const int T_out = int(assignments.size() / 4);
  std::vector<uint16_t> out(T_out);
  for (int t = 0; t < T_out; ++t) {
    std::map<uint16_t, int> count;
    for (int j = 0; j < 4; ++j) ++count[assignments[size_t(4 * t + j)]];
    // Majority; ties broken by earliest occurrence in the block.
    int best_count = 0;
    uint16_t best = assignments[size_t(4 * t)];
    for (int j = 0; j < 4; ++j) {
      uint16_t a = assignments[size_t(4 * t + j)];
      if (count[a] > best_count) {
        best_count = count[a];
        best = a;
      }
    }
    out[t] = best;
  }
  return out;
}

void pad_rows_to(Mat &m, int n) {
  if (m.rows >= n || m.rows == 0) return;
  Mat out(n, m.cols);
  std::copy(m.d.begin(), m.d.end(), out.d.begin());
  for (int t = m.rows; t < n; ++t) std::copy_n(m.row(m.rows - 1), m.cols, out.row(t));
  m = std::move(out);
}

void save_features(const FeatureSequence &f, const std::string &path) {
  BinWriter w(path);
  w.magic("AVF1");
  w.u16(uint16_t(f.kind));
  w.u16(uint16_t(f.rate));
  w.u32(uint32_t(f.data.rows));
  w.u32(uint32_t(f.data.cols));
  w.f32v(f.data.d);
  w.close();
}

FeatureSequence load_features(const std::string &path) {
  BinReader r(path);
  r.expect_magic("AVF1");
  FeatureSequence f;
  f.kind = FeatureKind(r.u16());
  f.rate = r.u16();
  int T = int(r.u32()), D = int(r.u32());
  f.data = Mat(T, D);
  f.data.d = r.f32v(size_t(T) * D);
  return f;
}

ColumnStats compute_column_stats(const std::vector<const Mat *> &mats) {
  if (mats.empty() || mats[0]->cols == 0) throw ParamError("compute_column_stats: no data");
  const int D = mats[0]->cols;
  std::vector<double> sum(D, 0.0), sq(D, 0.0);
  size_t n = 0;
  for (const Mat *m : mats) {
    for (int t = 0; t < m->rows; ++t)
      for (int j = 0; j < D; ++j) {
        double v = m->at(t, j);
        sum[j] += v;
        sq[j] += v * v;
      }
    n += size_t(m->rows);
  }
  ColumnStats s;
  s.mean.resize(D);
  s.stdev.resize(D);
  for (int j = 0; j < D; ++j) {
    double mu = sum[j] / double(n);
    double var = std::max(0.0, sq[j] / double(n) - mu * mu);
    s.mean[j] = float(mu);
    s.stdev[j] = float(std::sqrt(var) > 1e-8 ? std::sqrt(var) : 1.0);
  }
  return s;
}

void standardize_columns(Mat &m, const ColumnStats &s) {
  for (int t = 0; t < m.rows; ++t)
    for (int j = 0; j < m.cols; ++j) m.at(t, j) = (m.at(t, j) - s.mean[j]) / s.stdev[j];
}

}  // namespace avlearn
