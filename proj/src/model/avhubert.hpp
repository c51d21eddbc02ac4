// model/avhubert.hpp

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

// Audio-visual masked cluster prediction network: a linear audio encoder and
// a small visual front-end feed a modality-dropout fusion into a pre-norm
// transformer; a linear projection predicts per-frame cluster units and an
// optional CTC head serves fine-tuning. Templated on the scalar so the whole
// network runs at f64 for finite-difference gradient verification.

#ifndef AVLEARN_MODEL_AVHUBERT_HPP
#define AVLEARN_MODEL_AVHUBERT_HPP

#include <deque>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "model/ctc.hpp"
#include "nn/tensor.hpp"
#include "util/rng.hpp"

namespace avlearn {

struct ModelConfig {
  int dim = 64;            // d; even, divisible by heads
  int layers = 3;
  int heads = 4;
  int ffn_dim = 256;
  double dropout = 0.1;
  double attn_dropout = 0.1;
  double layer_drop = 0.1;   // train-time Bernoulli block skip, no rescale
  int codebook = 20;         // V
  double alpha = 0.0;        // unmasked-loss weight
  double p_m = 0.5;          // both-modality probability
  double p_a = 0.5;          // audio pick when one modality survives
  int image_size = 16;
  int visual_hidden = 64;
  int audio_dim = 104;
  int ctc_vocab = 0;         // U; CTC head attached when > 0
  bool use_positions = true;

  void validate() const {
    if (dim < 2 || dim % 2 != 0 || dim % heads != 0)
      throw ConfigError("ModelConfig: dim must be even and divisible by heads");
    if (codebook < 2) throw ConfigError("ModelConfig: codebook size must be >= 2");
    if (alpha < 0) throw ConfigError("ModelConfig: alpha must be >= 0");
    if (p_m < 0 || p_m > 1 || p_a < 0 || p_a > 1)
      throw ConfigError("ModelConfig: probabilities must be in [0, 1]");
    if (layers < 0 || ffn_dim < 1 || visual_hidden < 1)
      throw ConfigError("ModelConfig: bad architecture sizes");
    if (dropout < 0 || dropout >= 1 || attn_dropout < 0 || attn_dropout >= 1 ||
        layer_drop < 0 || layer_drop >= 1)
      throw ConfigError("ModelConfig: dropout rates must be in [0, 1)");
  }

  std::string to_json() const {
    nlohmann::json j;
    j["dim"] = dim; j["layers"] = layers; j["heads"] = heads; j["ffn_dim"] = ffn_dim;
    j["dropout"] = dropout; j["attn_dropout"] = attn_dropout; j["layer_drop"] = layer_drop;
    j["codebook"] = codebook; j["alpha"] = alpha; j["p_m"] = p_m; j["p_a"] = p_a;
    j["image_size"] = image_size; j["visual_hidden"] = visual_hidden;
    j["audio_dim"] = audio_dim; j["ctc_vocab"] = ctc_vocab; j["use_positions"] = use_positions;
    return j.dump();
  }

  static ModelConfig from_json(const std::string &s) {
    nlohmann::json j = nlohmann::json::parse(s);
    ModelConfig c;
    c.dim = j.at("dim"); c.layers = j.at("layers"); c.heads = j.at("heads");
    c.ffn_dim = j.at("ffn_dim"); c.dropout = j.at("dropout");
    c.attn_dropout = j.at("attn_dropout"); c.layer_drop = j.at("layer_drop");
    c.codebook = j.at("codebook"); c.alpha = j.at("alpha"); c.p_m = j.at("p_m");
    c.p_a = j.at("p_a"); c.image_size = j.at("image_size");
    c.visual_hidden = j.at("visual_hidden"); c.audio_dim = j.at("audio_dim");
    c.ctc_vocab = j.at("ctc_vocab"); c.use_positions = j.at("use_positions");
    c.validate();
    return c;
  }
};

// Resolved fusion branch for one sequence.
enum class FuseMode { Both, AudioOnly, VisualOnly };

template <typename S>
class AVHubertT {
 public:
  using Tape = TapeT<S>;
  using Node = typename Tape::Node;
  using Param = ParamT<S>;

  AVHubertT(const ModelConfig &cfg, uint64_t init_seed) : cfg_(cfg) {
    cfg_.validate();
    auto rng = make_rng(init_seed, "init");
    const int d = cfg_.dim, h = d / 2, vh = cfg_.visual_hidden;
    const int px = cfg_.image_size * cfg_.image_size;

    a_enc_w_ = make_param("audio_enc.w", cfg_.audio_dim, h, rng);
    a_enc_b_ = make_param("audio_enc.b", 1, h, rng, true);
    a_mask_emb_ = make_param("audio_mask_emb", 1, cfg_.audio_dim, rng);
    v_l1_w_ = make_param("visual_enc.l1.w", px, vh, rng);
    v_l1_b_ = make_param("visual_enc.l1.b", 1, vh, rng, true);
    v_conv_w_ = make_param("visual_enc.conv.w", 5, vh, rng);
    v_l2_w_ = make_param("visual_enc.l2.w", vh, h, rng);
    v_l2_b_ = make_param("visual_enc.l2.b", 1, h, rng, true);
    v_mask_emb_ = make_param("visual_mask_emb", 1, px, rng);
    fused_mask_emb_ = make_param("fused_mask_emb", 1, d, rng);

    blocks_.resize(size_t(cfg_.layers));
    for (int l = 0; l < cfg_.layers; ++l) {
      auto pre = "block" + std::to_string(l) + ".";
      Block &b = blocks_[size_t(l)];
      b.ln1_g = make_param(pre + "ln1.g", 1, d, rng, false, S(1));
      b.ln1_b = make_param(pre + "ln1.b", 1, d, rng, true);
      b.wq = make_param(pre + "attn.wq", d, d, rng);
      b.bq = make_param(pre + "attn.bq", 1, d, rng, true);
      b.wk = make_param(pre + "attn.wk", d, d, rng);
      b.bk = make_param(pre + "attn.bk", 1, d, rng, true);
      b.wv = make_param(pre + "attn.wv", d, d, rng);
      b.bv = make_param(pre + "attn.bv", 1, d, rng, true);
      b.wo = make_param(pre + "attn.wo", d, d, rng);
      b.bo = make_param(pre + "attn.bo", 1, d, rng, true);
      b.ln2_g = make_param(pre + "ln2.g", 1, d, rng, false, S(1));
      b.ln2_b = make_param(pre + "ln2.b", 1, d, rng, true);
      b.ffn_w1 = make_param(pre + "ffn.w1", d, cfg_.ffn_dim, rng);
      b.ffn_b1 = make_param(pre + "ffn.b1", 1, cfg_.ffn_dim, rng, true);
      b.ffn_w2 = make_param(pre + "ffn.w2", cfg_.ffn_dim, d, rng);
      b.ffn_b2 = make_param(pre + "ffn.b2", 1, d, rng, true);
    }
    proj_w_ = make_param("proj.w", d, cfg_.codebook, rng);
    proj_b_ = make_param("proj.b", 1, cfg_.codebook, rng, true);
    if (cfg_.ctc_vocab > 0) {
      ctc_w_ = make_param("ctc.w", d, cfg_.ctc_vocab + 1, rng);
      ctc_b_ = make_param("ctc.b", 1, cfg_.ctc_vocab + 1, rng, true);
    }
  }

  const ModelConfig &config() const { return cfg_; }

  std::vector<Param *> params() {
    std::vector<Param *> out;
    for (Param &p : store_) out.push_back(&p);
    return out;
  }

  std::vector<const Param *> params() const {
    std::vector<const Param *> out;
    for (const Param &p : store_) out.push_back(&p);
    return out;
  }

  // Everything except the CTC head; frozen during the first part of
  // fine-tuning when requested.
  std::vector<Param *> encoder_params() {
    std::vector<Param *> out;
    for (Param &p : store_)
      if (p.name.rfind("ctc.", 0) != 0) out.push_back(&p);
    return out;
  }

  // Adds a CTC head to a model restored from a pretraining checkpoint.
  void attach_ctc_head(int vocab, uint64_t seed) {
    if (ctc_w_) throw ConfigError("attach_ctc_head: head already present");
    auto rng = make_rng(seed, "ctc-head-init");
    cfg_.ctc_vocab = vocab;
    ctc_w_ = make_param("ctc.w", cfg_.dim, vocab + 1, rng);
    ctc_b_ = make_param("ctc.b", 1, vocab + 1, rng, true);
  }

  // ---- forward pieces ----

  // fa: [T x audio_dim] stacked fbank rows; each row is standardized before
  // the linear map. mask_flags selects rows replaced by the learned audio
  // mask embedding (input-level audio masking).
  Node *encode_audio(Tape &t, const Mat &fa, const std::vector<uint8_t> *mask_flags) {
    if (fa.cols != cfg_.audio_dim)
      throw ShapeError("encode_audio: expected " + std::to_string(cfg_.audio_dim) +
                       " dims, got " + std::to_string(fa.cols));
    Node *x = t.input(normalize_rows(fa));
    if (mask_flags) x = t.replace_rows(x, *mask_flags, t.leaf(*a_mask_emb_));
    return t.add_rowvec(t.matmul(x, t.leaf(*a_enc_w_)), t.leaf(*a_enc_b_));
  }

  // frames: T images; learned_flags marks frames substituted by the learned
  // visual mask embedding (pixel space) before encoding.
  Node *encode_visual(Tape &t, const std::vector<Mat> &frames,
                      const std::vector<uint8_t> *learned_flags) {
    const int px = cfg_.image_size * cfg_.image_size;
    Mat flat(int(frames.size()), px);
    for (size_t i = 0; i < frames.size(); ++i) {
      if (frames[i].rows * frames[i].cols != px)
        throw ShapeError("encode_visual: frame size mismatch");
      std::copy(frames[i].d.begin(), frames[i].d.end(), flat.row(int(i)));
    }
    Node *x = t.input(flat);
    if (learned_flags) x = t.replace_rows(x, *learned_flags, t.leaf(*v_mask_emb_));
    Node *hgate = t.relu(t.add_rowvec(t.matmul(x, t.leaf(*v_l1_w_)), t.leaf(*v_l1_b_)));
    Node *conv = t.depthwise_conv_time(hgate, t.leaf(*v_conv_w_));
    return t.add_rowvec(t.matmul(conv, t.leaf(*v_l2_w_)), t.leaf(*v_l2_b_));
  }

  // One branch draw per sequence.
  FuseMode sample_branch(std::mt19937_64 &rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) < cfg_.p_m) return FuseMode::Both;
    return unit(rng) < cfg_.p_a ? FuseMode::AudioOnly : FuseMode::VisualOnly;
  }

  // Channel-wise concatenation with the dropped modality contributing zeros.
  // Pass nullptr for a branch the caller never computed.
  Node *fuse(Tape &t, Node *fa, Node *fv, FuseMode mode) {
    const int h = cfg_.dim / 2;
    const int T = fa ? fa->rows : fv->rows;
    if (fa && fv && fa->rows != fv->rows)
      throw ShapeError("fuse: audio and visual lengths differ");
    switch (mode) {
      case FuseMode::Both:
        return t.concat_cols(fa, fv);
      case FuseMode::AudioOnly:
        return t.concat_cols(fa, t.zeros(T, h));
      case FuseMode::VisualOnly:
        return t.concat_cols(t.zeros(T, h), fv);
    }
    throw ParamError("fuse: bad mode");
  }

  // Runs every transformer block; returns per-block outputs, with the final
  // entry being e (post final layer norm). fused_mask_flags triggers the
  // feature-level learned mask embedding before block 1.
  std::vector<Node *> transformer_blocks(Tape &t, Node *x,
                                         const std::vector<uint8_t> *fused_mask_flags,
                                         bool train, std::mt19937_64 *rng) {
    const int T = x->rows, d = cfg_.dim;
    if (x->cols != d) throw ShapeError("transformer: input dim != model dim");
    if (cfg_.use_positions) x = t.add(x, t.input(positions(T)));
    if (fused_mask_flags) x = t.replace_rows(x, *fused_mask_flags, t.leaf(*fused_mask_emb_));

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Node *> outs;
    for (Block &b : blocks_) {
      if (train && cfg_.layer_drop > 0 && unit(*rng) < cfg_.layer_drop) {
        outs.push_back(x);  // skipped block: residual passthrough
        continue;
      }
      Node *a_in = affine_ln(t, x, b.ln1_g, b.ln1_b);
      Node *att = attention(t, a_in, b, train, rng);
      if (train && cfg_.dropout > 0) att = t.dropout(att, cfg_.dropout, *rng);
      Node *h1 = t.add(x, att);
      Node *f_in = affine_ln(t, h1, b.ln2_g, b.ln2_b);
      Node *f = t.add_rowvec(t.matmul(f_in, t.leaf(*b.ffn_w1)), t.leaf(*b.ffn_b1));
      f = t.gelu(f);
      f = t.add_rowvec(t.matmul(f, t.leaf(*b.ffn_w2)), t.leaf(*b.ffn_b2));
      if (train && cfg_.dropout > 0) f = t.dropout(f, cfg_.dropout, *rng);
      x = t.add(h1, f);
      outs.push_back(x);
    }
    // 0-layer config degenerates to the identity path (input + positions).
    if (outs.empty()) outs.push_back(x);
    return outs;
  }

  Node *predict_clusters(Tape &t, Node *e) {
    return t.log_softmax_rows(t.add_rowvec(t.matmul(e, t.leaf(*proj_w_)), t.leaf(*proj_b_)));
  }

  Node *ctc_log_probs(Tape &t, Node *e) {
    if (!ctc_w_) throw ConfigError("ctc_log_probs: model has no CTC head");
    return t.log_softmax_rows(t.add_rowvec(t.matmul(e, t.leaf(*ctc_w_)), t.leaf(*ctc_b_)));
  }

  // Deterministic eval-mode features after block `layer` (1-based), no
  // masking; `mode` selects which modalities are fed (a single-modality
  // model should be read out through its own branch).
  Mat extract_features(const Mat &fa, const std::vector<Mat> &frames, int layer,
                       FuseMode mode = FuseMode::Both) {
    if (layer < 1 || layer > std::max(1, cfg_.layers))
      throw ParamError("extract_features: layer out of range");
    Tape t;
    Node *a = mode == FuseMode::VisualOnly ? nullptr : encode_audio(t, fa, nullptr);
    Node *v = mode == FuseMode::AudioOnly ? nullptr : encode_visual(t, frames, nullptr);
    Node *x = fuse(t, a, v, mode);
    std::vector<Node *> outs = transformer_blocks(t, x, nullptr, false, nullptr);
    Node *src = outs[size_t(std::min(layer, int(outs.size())) - 1)];
    Mat out(src->rows, src->cols);
    for (size_t i = 0; i < src->val.size(); ++i) out.d[i] = float(src->val[i]);
    return out;
  }

 private:
  struct Block {
    Param *ln1_g, *ln1_b, *wq, *bq, *wk, *bk, *wv, *bv, *wo, *bo;
    Param *ln2_g, *ln2_b, *ffn_w1, *ffn_b1, *ffn_w2, *ffn_b2;
  };

  Param *make_param(const std::string &name, int r, int c, std::mt19937_64 &rng,
                    bool zero = false, S fill = S(0)) {
    store_.emplace_back(name, r, c);
    Param &p = store_.back();
    if (fill != S(0)) {
      std::fill(p.value.begin(), p.value.end(), fill);
    } else if (!zero) {
      std::normal_distribution<double> init(0.0, 0.02);
      for (S &v : p.value) v = S(init(rng));
    }
    return &p;
  }

  static Mat normalize_rows(const Mat &m) {
    Mat out = m;
    for (int r = 0; r < m.rows; ++r) {
      double mu = 0;
      for (int c = 0; c < m.cols; ++c) mu += m.at(r, c);
      mu /= m.cols;
      double var = 0;
      for (int c = 0; c < m.cols; ++c) {
        double d = m.at(r, c) - mu;
        var += d * d;
      }
      var /= m.cols;
      float inv = float(1.0 / std::sqrt(var + 1e-8));
      for (int c = 0; c < m.cols; ++c) out.at(r, c) = float((m.at(r, c) - mu) * inv);
    }
    return out;
  }

  Mat positions(int T) const {
    Mat p(T, cfg_.dim);
    for (int t = 0; t < T; ++t)
      for (int i = 0; i < cfg_.dim / 2; ++i) {
        double freq = std::pow(10000.0, -2.0 * i / cfg_.dim);
        p.at(t, 2 * i) = float(std::sin(t * freq));
        p.at(t, 2 * i + 1) = float(std::cos(t * freq));
      }
    return p;
  }

  Node *affine_ln(Tape &t, Node *x, Param *g, Param *b) {
    return t.add_rowvec(t.mul_rowvec(t.layernorm_rows(x), t.leaf(*g)), t.leaf(*b));
  }

  Node *attention(Tape &t, Node *x, Block &b, bool train, std::mt19937_64 *rng) {
    const int d = cfg_.dim, H = cfg_.heads, dh = d / H;
    Node *q = t.add_rowvec(t.matmul(x, t.leaf(*b.wq)), t.leaf(*b.bq));
    Node *k = t.add_rowvec(t.matmul(x, t.leaf(*b.wk)), t.leaf(*b.bk));
    Node *v = t.add_rowvec(t.matmul(x, t.leaf(*b.wv)), t.leaf(*b.bv));
    Node *cat = nullptr;
    const S inv_sqrt = S(1.0 / std::sqrt(double(dh)));
    for (int h = 0; h < H; ++h) {
      Node *qh = t.slice_cols(q, h * dh, (h + 1) * dh);
      Node *kh = t.slice_cols(k, h * dh, (h + 1) * dh);
      Node *vh = t.slice_cols(v, h * dh, (h + 1) * dh);
      Node *scores = t.scale(t.matmul(qh, kh, false, true), inv_sqrt);
      Node *p = t.softmax_rows(scores);
      if (train && cfg_.attn_dropout > 0) p = t.dropout(p, cfg_.attn_dropout, *rng);
      Node *oh = t.matmul(p, vh);
      cat = cat ? t.concat_cols(cat, oh) : oh;
    }
    return t.add_rowvec(t.matmul(cat, t.leaf(*b.wo)), t.leaf(*b.bo));
  }

  ModelConfig cfg_;
  std::deque<Param> store_;

  Param *a_enc_w_, *a_enc_b_, *a_mask_emb_;
  Param *v_l1_w_, *v_l1_b_, *v_conv_w_, *v_l2_w_, *v_l2_b_, *v_mask_emb_;
  Param *fused_mask_emb_;
  std::vector<Block> blocks_;
  Param *proj_w_, *proj_b_;
  Param *ctc_w_ = nullptr, *ctc_b_ = nullptr;
};

// Masked-prediction loss: mean of -log p_t(z_t) over masked frames, plus
// alpha-weighted unmasked frames; normalized by the contributing frame count.
template <typename S>
typename TapeT<S>::Node *masked_loss(TapeT<S> &t, typename TapeT<S>::Node *logp,
                                     const std::vector<uint16_t> &z,
                                     const std::vector<uint8_t> &mask_union, double alpha) {
  if (int(z.size()) != logp->rows || mask_union.size() != z.size())
    throw ShapeError("masked_loss: length mismatch");
  std::vector<S> w(z.size(), S(0));
  long contributing = 0;
  for (size_t i = 0; i < z.size(); ++i) {
    if (mask_union[i]) {
      w[i] = S(1);
      ++contributing;
    } else if (alpha > 0) {
      w[i] = S(alpha);
      ++contributing;
    }
  }
  if (contributing == 0) throw LossError("masked_loss: empty contributing set");
  return t.scale(t.nll(logp, z, w), S(1.0 / double(contributing)));
}

using AVHubert32 = AVHubertT<float>;
using AVHubert64 = AVHubertT<double>;

}  // namespace avlearn

#endif  // AVLEARN_MODEL_AVHUBERT_HPP
