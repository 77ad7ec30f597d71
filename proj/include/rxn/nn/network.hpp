#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rxn/nn/model.hpp"

namespace rxn::nn {

namespace detail {

template <class T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

template <class Derived>
void check_finite(const Eigen::MatrixBase<Derived>& m, const char* layer) {
  if (!m.allFinite()) throw Error(ErrorCode::NonFinite, std::string("non-finite values in layer ") + layer);
}

}  // namespace detail

// Activations of one direction of the recurrent layer, stored in processing
// order (column t is the t-th step of that direction).
template <class T>
struct GruTrace {
  std::vector<int> order;  // sequence position consumed at each step
  Mat<T> x;                // E x L, embedded inputs in processing order
  Mat<T> h;                // H x (L+1), column 0 is the zero initial state
  Mat<T> r, z, n;          // H x L gate activations
  Mat<T> hn;               // H x L, (Wh h + bh) rows of the candidate gate
};

// Everything the backward pass needs from one forward evaluation.
template <class T>
struct Trace {
  std::vector<int> tokens;
  bool use_attention = false;
  GruTrace<T> gru[2];
  Mat<T> recurrent;  // D x L
  // attention block
  Mat<T> xhat;       // D x L normalized input
  Vec<T> inv_std;    // L
  Mat<T> normed;     // D x L
  Mat<T> q, k, v;    // D x L
  std::vector<Mat<T>> probs;  // per head, L x L, row i = query position i
  Mat<T> context;    // D x L, concatenated head outputs
  Mat<T> block_out;  // D x L
  Vec<T> pooled;     // D
  Vec<T> hidden;     // D, tanh activations of the first head layer
  Vec<T> logits;     // n
  Vec<T> scores;     // n
};

inline constexpr double kLayerNormEps = 1e-5;

// Truncates to the configured maximum length; reports whether it did.
inline std::vector<int> fit_tokens(const ModelConfig& cfg, std::span<const int> tokens, bool* truncated = nullptr) {
  const auto keep = std::min<std::size_t>(tokens.size(), static_cast<std::size_t>(cfg.max_len));
  if (truncated) *truncated = keep < tokens.size();
  return {tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(keep)};
}

template <class T>
void gru_forward(const GruParams<T>& p, const Mat<T>& embedded, bool reverse, GruTrace<T>& tr) {
  const Eigen::Index L = embedded.cols(), H = p.wh.cols();
  tr.order.resize(static_cast<std::size_t>(L));
  for (Eigen::Index t = 0; t < L; ++t) tr.order[static_cast<std::size_t>(t)] = static_cast<int>(reverse ? L - 1 - t : t);
  tr.x.resize(embedded.rows(), L);
  for (Eigen::Index t = 0; t < L; ++t) tr.x.col(t) = embedded.col(tr.order[static_cast<std::size_t>(t)]);

  Mat<T> gx = p.wx * tr.x;
  gx.colwise() += p.bx;
  tr.h = Mat<T>::Zero(H, L + 1);
  tr.r.resize(H, L);
  tr.z.resize(H, L);
  tr.n.resize(H, L);
  tr.hn.resize(H, L);
  Vec<T> gh(3 * H);
  for (Eigen::Index t = 0; t < L; ++t) {
    gh.noalias() = p.wh * tr.h.col(t);
    gh += p.bh;
    for (Eigen::Index i = 0; i < H; ++i) {
      const T r = detail::sigmoid(gx(i, t) + gh(i));
      const T z = detail::sigmoid(gx(H + i, t) + gh(H + i));
      const T n = std::tanh(gx(2 * H + i, t) + r * gh(2 * H + i));
      tr.r(i, t) = r;
      tr.z(i, t) = z;
      tr.n(i, t) = n;
      tr.hn(i, t) = gh(2 * H + i);
      tr.h(i, t + 1) = (T(1) - z) * n + z * tr.h(i, t);
    }
  }
}

// Pre-normalized multi-head self-attention with a residual connection.
template <class T>
void attention_forward(const Params<T>& p, int heads, Trace<T>& tr) {
  const Mat<T>& x = tr.recurrent;
  const Eigen::Index D = x.rows(), L = x.cols(), dh = D / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));

  tr.xhat.resize(D, L);
  tr.inv_std.resize(L);
  for (Eigen::Index t = 0; t < L; ++t) {
    const T mu = x.col(t).mean();
    const T var = (x.col(t).array() - mu).square().mean();
    const T inv = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
    tr.inv_std(t) = inv;
    tr.xhat.col(t) = (x.col(t).array() - mu) * inv;
  }
  tr.normed = (tr.xhat.array().colwise() * p.ln_gain.array()).matrix();
  tr.normed.colwise() += p.ln_bias;

  tr.q = p.wq * tr.normed;
  tr.q.colwise() += p.bq;
  tr.k = p.wk * tr.normed;
  tr.k.colwise() += p.bk;
  tr.v = p.wv * tr.normed;
  tr.v.colwise() += p.bv;

  tr.probs.assign(static_cast<std::size_t>(heads), Mat<T>());
  tr.context.resize(D, L);
  for (int h = 0; h < heads; ++h) {
    const auto qh = tr.q.middleRows(h * dh, dh);
    const auto kh = tr.k.middleRows(h * dh, dh);
    const auto vh = tr.v.middleRows(h * dh, dh);
    Mat<T> s = (qh.transpose() * kh) * scale;  // L x L
    for (Eigen::Index i = 0; i < L; ++i) {
      const T mx = s.row(i).maxCoeff();
      s.row(i) = (s.row(i).array() - mx).exp();
      s.row(i) /= s.row(i).sum();
    }
    tr.context.middleRows(h * dh, dh).noalias() = vh * s.transpose();
    tr.probs[static_cast<std::size_t>(h)] = std::move(s);
  }
  tr.block_out = p.wo * tr.context;
  tr.block_out.colwise() += p.bo;
  tr.block_out += x;
}

// Scores are pushed strictly inside (0,1) when the sigmoid saturates.
template <class T>
T bounded_sigmoid(T x) {
  const T lo = std::numeric_limits<T>::min();
  const T hi = T(1) - std::numeric_limits<T>::epsilon() / T(2);
  return std::clamp(detail::sigmoid(x), lo, hi);
}

// Full forward pass. With `use_attention` off the attention block is skipped
// and the recurrent output is pooled directly.
template <class T>
void forward_trace(const Model<T>& model, std::span<const int> tokens, bool use_attention, Trace<T>& tr) {
  const auto& p = model.params;
  const auto& cfg = model.config;
  tr.tokens = fit_tokens(cfg, tokens);
  tr.use_attention = use_attention;
  if (tr.tokens.empty()) throw Error(ErrorCode::EmptySequence, "cannot run the model on an empty sequence");
  const Eigen::Index L = static_cast<Eigen::Index>(tr.tokens.size()), H = cfg.recurrent_hidden;

  Mat<T> embedded(cfg.embed_dim, L);
  for (Eigen::Index t = 0; t < L; ++t) {
    const int tok = tr.tokens[static_cast<std::size_t>(t)];
    if (tok < 0 || tok >= kAlphabetSize) throw Error(ErrorCode::InvalidArgument, "token outside the alphabet");
    embedded.col(t) = p.embedding.col(tok);
  }
  detail::check_finite(embedded, "embedding");

  tr.recurrent.resize(2 * H, L);
  for (int d = 0; d < 2; ++d) {
    gru_forward(p.gru[d], embedded, d == 1, tr.gru[d]);
    const auto& g = tr.gru[d];
    for (Eigen::Index t = 0; t < L; ++t) {
      tr.recurrent.block(d * H, g.order[static_cast<std::size_t>(t)], H, 1) = g.h.col(t + 1);
    }
  }
  detail::check_finite(tr.recurrent, "recurrent");

  if (use_attention) {
    attention_forward(p, cfg.attention_heads, tr);
    detail::check_finite(tr.block_out, "attention");
    tr.pooled = tr.block_out.rowwise().mean();
  } else {
    tr.pooled = tr.recurrent.rowwise().mean();
  }

  tr.hidden = (p.w1 * tr.pooled + p.b1).array().tanh().matrix();
  tr.logits = p.w2 * tr.hidden + p.b2;
  detail::check_finite(tr.logits, "head");
  tr.scores = tr.logits.unaryExpr([](T x) { return bounded_sigmoid(x); });
}

template <class T>
Vec<T> forward(const Model<T>& model, std::span<const int> tokens, bool use_attention) {
  Trace<T> tr;
  forward_trace(model, tokens, use_attention, tr);
  return tr.scores;
}

// Mean-pooled representation in front of the classifier head (attention on).
template <class T>
Vec<T> pooled_representation(const Model<T>& model, std::span<const int> tokens) {
  Trace<T> tr;
  forward_trace(model, tokens, true, tr);
  return tr.pooled;
}

template <class T>
void gru_backward(const GruParams<T>& p, const GruTrace<T>& tr, const Mat<T>& d_out, GruParams<T>& g,
                  Mat<T>& d_x) {
  const Eigen::Index L = tr.x.cols(), H = p.wh.cols();
  Mat<T> d_gx(3 * H, L), d_gh(3 * H, L);
  Vec<T> dh_next = Vec<T>::Zero(H);
  for (Eigen::Index t = L - 1; t >= 0; --t) {
    const Vec<T> dh = d_out.col(tr.order[static_cast<std::size_t>(t)]) + dh_next;
    for (Eigen::Index i = 0; i < H; ++i) {
      const T r = tr.r(i, t), z = tr.z(i, t), n = tr.n(i, t), hp = tr.h(i, t);
      const T dn = dh(i) * (T(1) - z);
      const T dz = dh(i) * (hp - n);
      const T dn_pre = dn * (T(1) - n * n);
      const T dr = dn_pre * tr.hn(i, t);
      const T dr_pre = dr * r * (T(1) - r);
      const T dz_pre = dz * z * (T(1) - z);
      d_gx(i, t) = dr_pre;
      d_gx(H + i, t) = dz_pre;
      d_gx(2 * H + i, t) = dn_pre;
      d_gh(i, t) = dr_pre;
      d_gh(H + i, t) = dz_pre;
      d_gh(2 * H + i, t) = dn_pre * r;
      dh_next(i) = dh(i) * z;
    }
    dh_next.noalias() += p.wh.transpose() * d_gh.col(t);
  }
  g.wx.noalias() += d_gx * tr.x.transpose();
  g.bx += d_gx.rowwise().sum();
  g.wh.noalias() += d_gh * tr.h.leftCols(L).transpose();
  g.bh += d_gh.rowwise().sum();
  const Mat<T> dx_ordered = p.wx.transpose() * d_gx;
  for (Eigen::Index t = 0; t < L; ++t) d_x.col(tr.order[static_cast<std::size_t>(t)]) += dx_ordered.col(t);
}

template <class T>
void attention_backward(const Params<T>& p, int heads, const Trace<T>& tr, const Mat<T>& d_out, Params<T>& g,
                        Mat<T>& d_x) {
  const Eigen::Index D = tr.recurrent.rows(), L = tr.recurrent.cols(), dh = D / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));

  d_x = d_out;  // residual path
  g.wo.noalias() += d_out * tr.context.transpose();
  g.bo += d_out.rowwise().sum();
  const Mat<T> d_context = p.wo.transpose() * d_out;

  Mat<T> dq(D, L), dk(D, L), dv(D, L);
  for (int h = 0; h < heads; ++h) {
    const auto& P = tr.probs[static_cast<std::size_t>(h)];
    const auto qh = tr.q.middleRows(h * dh, dh);
    const auto kh = tr.k.middleRows(h * dh, dh);
    const auto vh = tr.v.middleRows(h * dh, dh);
    const auto dctx = d_context.middleRows(h * dh, dh);
    dv.middleRows(h * dh, dh).noalias() = dctx * P;
    const Mat<T> dP = dctx.transpose() * vh;
    Mat<T> dS = P.cwiseProduct(dP);
    const Vec<T> row_dot = dS.rowwise().sum();
    dS -= (P.array().colwise() * row_dot.array()).matrix();
    dq.middleRows(h * dh, dh).noalias() = (kh * dS.transpose()) * scale;
    dk.middleRows(h * dh, dh).noalias() = (qh * dS) * scale;
  }

  Mat<T> d_normed = p.wq.transpose() * dq;
  d_normed.noalias() += p.wk.transpose() * dk;
  d_normed.noalias() += p.wv.transpose() * dv;
  g.wq.noalias() += dq * tr.normed.transpose();
  g.wk.noalias() += dk * tr.normed.transpose();
  g.wv.noalias() += dv * tr.normed.transpose();
  g.bq += dq.rowwise().sum();
  g.bk += dk.rowwise().sum();
  g.bv += dv.rowwise().sum();

  g.ln_gain += d_normed.cwiseProduct(tr.xhat).rowwise().sum();
  g.ln_bias += d_normed.rowwise().sum();
  const Mat<T> d_xhat = (d_normed.array().colwise() * p.ln_gain.array()).matrix();
  for (Eigen::Index t = 0; t < L; ++t) {
    const T mean_d = d_xhat.col(t).mean();
    const T mean_dx = d_xhat.col(t).dot(tr.xhat.col(t)) / static_cast<T>(D);
    d_x.col(t).array() +=
        tr.inv_std(t) * (d_xhat.col(t).array() - mean_d - tr.xhat.col(t).array() * mean_dx);
  }
}

// Accumulates into `g` the gradient of a scalar loss whose derivative with
// respect to the logits is `d_logits`.
template <class T>
void backward(const Model<T>& model, const Trace<T>& tr, const Vec<T>& d_logits, Params<T>& g) {
  const auto& p = model.params;
  const auto& cfg = model.config;
  const Eigen::Index L = static_cast<Eigen::Index>(tr.tokens.size()), H = cfg.recurrent_hidden;

  g.w2.noalias() += d_logits * tr.hidden.transpose();
  g.b2 += d_logits;
  const Vec<T> d_hidden_pre =
      ((p.w2.transpose() * d_logits).array() * (T(1) - tr.hidden.array().square())).matrix();
  g.w1.noalias() += d_hidden_pre * tr.pooled.transpose();
  g.b1 += d_hidden_pre;
  const Vec<T> d_pooled = p.w1.transpose() * d_hidden_pre;

  Mat<T> d_block = d_pooled.replicate(1, L) / static_cast<T>(L);
  Mat<T> d_recurrent;
  if (tr.use_attention) {
    attention_backward(p, cfg.attention_heads, tr, d_block, g, d_recurrent);
  } else {
    d_recurrent = std::move(d_block);
  }

  Mat<T> d_embedded = Mat<T>::Zero(cfg.embed_dim, L);
  for (int d = 0; d < 2; ++d) {
    gru_backward(p.gru[d], tr.gru[d], Mat<T>(d_recurrent.middleRows(d * H, H)), g.gru[d], d_embedded);
  }
  for (Eigen::Index t = 0; t < L; ++t) g.embedding.col(tr.tokens[static_cast<std::size_t>(t)]) += d_embedded.col(t);
}

}  // namespace rxn::nn
