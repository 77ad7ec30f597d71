#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rxn/core.hpp"
#include "rxn/error.hpp"
#include "rxn/random.hpp"

namespace rxn::nn {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

struct ModelConfig {
  int embed_dim = 32;
  int recurrent_hidden = 64;
  int attention_heads = 2;
  int n_labels = 2;
  int max_len = 512;
  std::uint64_t seed = 0;

  // Width of the bidirectional recurrent output, which is also the width of
  // the attention block and of the classifier's hidden layer.
  int width() const { return 2 * recurrent_hidden; }

  void validate() const {
    if (embed_dim < 1 || recurrent_hidden < 1 || attention_heads < 1 || n_labels < 1 || max_len < 1) {
      throw Error(ErrorCode::InvalidArgument, "model dimensions must be >= 1");
    }
    if (embed_dim % attention_heads != 0) {
      throw Error(ErrorCode::InvalidArgument, "embed_dim must be divisible by attention_heads");
    }
    if (width() % attention_heads != 0) {
      throw Error(ErrorCode::InvalidArgument, "2*recurrent_hidden must be divisible by attention_heads");
    }
  }

  bool operator==(const ModelConfig&) const = default;
};

// One direction of the gated recurrent layer. Gate rows are stacked as
// [reset; update; candidate].
template <class T>
struct GruParams {
  Mat<T> wx;  // 3H x E
  Mat<T> wh;  // 3H x H
  Vec<T> bx;  // 3H
  Vec<T> bh;  // 3H
};

template <class T>
struct Params {
  Mat<T> embedding;  // E x alphabet
  GruParams<T> gru[2];
  Vec<T> ln_gain, ln_bias;  // D
  Mat<T> wq, wk, wv, wo;    // D x D
  Vec<T> bq, bk, bv, bo;    // D
  Mat<T> w1;                // D x D
  Vec<T> b1;                // D
  Mat<T> w2;                // n x D
  Vec<T> b2;                // n

  // Visits every tensor in a fixed order; the order defines the checkpoint
  // payload layout.
  template <class F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <class F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    visit([&](const char*, const auto& t) { n += static_cast<std::size_t>(t.size()); });
    return n;
  }

  // Same shapes, all zeros.
  Params zeros_like() const {
    Params out = *this;
    out.visit([](const char*, auto& t) { t.setZero(); });
    return out;
  }

  template <class U>
  Params<U> cast() const {
    Params<U> out;
    out.embedding = embedding.template cast<U>();
    for (int d = 0; d < 2; ++d) {
      out.gru[d].wx = gru[d].wx.template cast<U>();
      out.gru[d].wh = gru[d].wh.template cast<U>();
      out.gru[d].bx = gru[d].bx.template cast<U>();
      out.gru[d].bh = gru[d].bh.template cast<U>();
    }
    out.ln_gain = ln_gain.template cast<U>();
    out.ln_bias = ln_bias.template cast<U>();
    out.wq = wq.template cast<U>();
    out.wk = wk.template cast<U>();
    out.wv = wv.template cast<U>();
    out.wo = wo.template cast<U>();
    out.bq = bq.template cast<U>();
    out.bk = bk.template cast<U>();
    out.bv = bv.template cast<U>();
    out.bo = bo.template cast<U>();
    out.w1 = w1.template cast<U>();
    out.b1 = b1.template cast<U>();
    out.w2 = w2.template cast<U>();
    out.b2 = b2.template cast<U>();
    return out;
  }

  std::vector<T> flatten() const {
    std::vector<T> out;
    out.reserve(parameter_count());
    visit([&](const char*, const auto& t) { out.insert(out.end(), t.data(), t.data() + t.size()); });
    return out;
  }

 private:
  template <class Self, class F>
  static void visit_impl(Self& p, F& f) {
    f("embedding", p.embedding);
    const char* names[2][4] = {{"gru_fwd.wx", "gru_fwd.wh", "gru_fwd.bx", "gru_fwd.bh"},
                               {"gru_bwd.wx", "gru_bwd.wh", "gru_bwd.bx", "gru_bwd.bh"}};
    for (int d = 0; d < 2; ++d) {
      f(names[d][0], p.gru[d].wx);
      f(names[d][1], p.gru[d].wh);
      f(names[d][2], p.gru[d].bx);
      f(names[d][3], p.gru[d].bh);
    }
    f("ln.gain", p.ln_gain);
    f("ln.bias", p.ln_bias);
    f("attn.wq", p.wq);
    f("attn.bq", p.bq);
    f("attn.wk", p.wk);
    f("attn.bk", p.bk);
    f("attn.wv", p.wv);
    f("attn.bv", p.bv);
    f("attn.wo", p.wo);
    f("attn.bo", p.bo);
    f("head.w1", p.w1);
    f("head.b1", p.b1);
    f("head.w2", p.w2);
    f("head.b2", p.b2);
  }
};

template <class T>
struct Model {
  ModelConfig config;
  Params<T> params;

  template <class U>
  Model<U> cast() const {
    return Model<U>{config, params.template cast<U>()};
  }
};

// Allocates every tensor for `cfg` with zeros.
template <class T>
Params<T> zero_params(const ModelConfig& cfg) {
  const int E = cfg.embed_dim, H = cfg.recurrent_hidden, D = cfg.width(), n = cfg.n_labels;
  Params<T> p;
  p.embedding = Mat<T>::Zero(E, kAlphabetSize);
  for (auto& g : p.gru) {
    g.wx = Mat<T>::Zero(3 * H, E);
    g.wh = Mat<T>::Zero(3 * H, H);
    g.bx = Vec<T>::Zero(3 * H);
    g.bh = Vec<T>::Zero(3 * H);
  }
  p.ln_gain = Vec<T>::Zero(D);
  p.ln_bias = Vec<T>::Zero(D);
  for (auto* w : {&p.wq, &p.wk, &p.wv, &p.wo, &p.w1}) *w = Mat<T>::Zero(D, D);
  for (auto* b : {&p.bq, &p.bk, &p.bv, &p.bo, &p.b1}) *b = Vec<T>::Zero(D);
  p.w2 = Mat<T>::Zero(n, D);
  p.b2 = Vec<T>::Zero(n);
  return p;
}

// Seeded initialization: uniform(+-1/sqrt(fan_in)) weights, unit layer-norm
// gain, and a zero attention output projection so the attention block starts
// as the identity map.
template <class T>
Model<T> init_model(const ModelConfig& cfg) {
  cfg.validate();
  Model<T> m{cfg, zero_params<T>(cfg)};
  Rng rng(derive_seed(cfg.seed, "model-init"));
  auto fill = [&](auto& t, double bound) {
    for (Eigen::Index k = 0; k < t.size(); ++k) t.data()[k] = static_cast<T>(rng.uniform(-bound, bound));
  };
  const double E = cfg.embed_dim, H = cfg.recurrent_hidden, D = cfg.width();
  fill(m.params.embedding, 1.0);
  for (auto& g : m.params.gru) {
    fill(g.wx, 1.0 / std::sqrt(E));
    fill(g.wh, 1.0 / std::sqrt(H));
    fill(g.bx, 1.0 / std::sqrt(H));
    fill(g.bh, 1.0 / std::sqrt(H));
  }
  m.params.ln_gain.setOnes();
  for (auto* w : {&m.params.wq, &m.params.wk, &m.params.wv}) fill(*w, 1.0 / std::sqrt(D));
  fill(m.params.w1, 1.0 / std::sqrt(D));
  fill(m.params.b1, 1.0 / std::sqrt(D));
  fill(m.params.w2, 1.0 / std::sqrt(D));
  fill(m.params.b2, 1.0 / std::sqrt(D));
  return m;
}

}  // namespace rxn::nn
