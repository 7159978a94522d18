#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "hstitch/error.hpp"
#include "hstitch/nn/model.hpp"
#include "hstitch/rng.hpp"
#include "hstitch/stitcher_encoding.hpp"

namespace hstitch::nn {

template <typename T>
using ColVec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
Mat<T> positional_encoding(Eigen::Index len, Eigen::Index d) {
  // Tables are cached per (type, width) and grown on demand.
  thread_local std::map<Eigen::Index, Mat<T>> cache;
  auto& pe = cache[d];
  if (pe.rows() < len) {
    const Eigen::Index rows = std::max<Eigen::Index>(len, 256);
    pe.resize(rows, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(i - i % 2) / static_cast<double>(d));
      for (Eigen::Index p = 0; p < rows; ++p) {
        const double a = static_cast<double>(p) * freq;
        pe(p, i) = static_cast<T>(i % 2 == 0 ? std::sin(a) : std::cos(a));
      }
    }
  }
  return pe.topRows(len);
}

// Mutable view of a gradient vector laid out like the model parameters.
template <typename T>
struct GradView {
  ParamVec<T>& g;

  Eigen::Map<Mat<T>> mat(const Slot& s) { return {g.data() + s.offset, s.rows, s.cols}; }
  Eigen::Map<RowVec<T>> row(const Slot& s) { return {g.data() + s.offset, s.cols}; }
};

namespace detail {

template <typename T>
struct NormCache {
  Mat<T> xhat;
  ColVec<T> rstd;
};

template <typename T>
struct AttnCache {
  Mat<T> xq, xkv, q, k, v, ctx;
  std::vector<Mat<T>> probs;
};

template <typename T>
struct FfCache {
  Mat<T> x, h;
};

template <typename T>
Mat<T> linear(const StitcherModel<T>& m, const LinearSlots& s, const Mat<T>& x) {
  Mat<T> y = x * m.mat(s.w);
  y.rowwise() += m.row(s.b);
  return y;
}

template <typename T>
Mat<T> linear_back(const StitcherModel<T>& m, GradView<T>& g, const LinearSlots& s,
                   const Mat<T>& x, const Mat<T>& dy) {
  g.mat(s.w).noalias() += x.transpose() * dy;
  g.row(s.b) += dy.colwise().sum();
  return dy * m.mat(s.w).transpose();
}

inline constexpr double kNormEps = 1e-5;

template <typename T>
Mat<T> layer_norm(const StitcherModel<T>& m, const NormSlots& s, const Mat<T>& x,
                  NormCache<T>& c) {
  const ColVec<T> mu = x.rowwise().mean();
  const Mat<T> xc = x.colwise() - mu;
  c.rstd = (xc.array().square().rowwise().sum() / T(x.cols()) + T(kNormEps)).rsqrt().matrix();
  c.xhat = xc.array().colwise() * c.rstd.array();
  Mat<T> y = c.xhat.array().rowwise() * m.row(s.gain).array();
  y.rowwise() += m.row(s.bias);
  return y;
}

template <typename T>
Mat<T> layer_norm_back(const StitcherModel<T>& m, GradView<T>& g, const NormSlots& s,
                       const NormCache<T>& c, const Mat<T>& dy) {
  g.row(s.gain) += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  g.row(s.bias) += dy.colwise().sum();
  const Mat<T> dxh = dy.array().rowwise() * m.row(s.gain).array();
  const ColVec<T> a = dxh.rowwise().mean();
  const ColVec<T> b = (dxh.array() * c.xhat.array()).rowwise().sum() / T(dy.cols());
  Mat<T> dx = (dxh.colwise() - a).array() - c.xhat.array().colwise() * b.array();
  dx.array().colwise() *= c.rstd.array();
  return dx;
}

template <typename T>
Mat<T> attention(const StitcherModel<T>& m, const AttnSlots& s, const Mat<T>& xq,
                 const Mat<T>& xkv, bool causal, AttnCache<T>& c) {
  const Eigen::Index heads = m.config.heads;
  c.xq = xq;
  c.xkv = xkv;
  c.q = linear(m, s.q, xq);
  c.k = linear(m, s.k, xkv);
  c.v = linear(m, s.v, xkv);
  const Eigen::Index d = c.q.cols(), dh = d / heads, lq = xq.rows(), lk = xkv.rows();
  const T scale = T(1) / std::sqrt(T(dh));
  c.ctx.resize(lq, d);
  c.probs.resize(static_cast<std::size_t>(heads));
  for (Eigen::Index h = 0; h < heads; ++h) {
    Mat<T> p = (c.q.middleCols(h * dh, dh) * c.k.middleCols(h * dh, dh).transpose()) * scale;
    for (Eigen::Index i = 0; i < lq; ++i) {
      const Eigen::Index lim = causal ? std::min(i + 1, lk) : lk;
      auto r = p.row(i);
      const T mx = r.head(lim).maxCoeff();
      r.head(lim) = (r.head(lim).array() - mx).exp().matrix();
      r.head(lim) /= r.head(lim).sum();
      r.tail(lk - lim).setZero();
    }
    c.ctx.middleCols(h * dh, dh).noalias() = p * c.v.middleCols(h * dh, dh);
    c.probs[static_cast<std::size_t>(h)] = std::move(p);
  }
  return linear(m, s.o, c.ctx);
}

// Returns (d xq, d xkv).
template <typename T>
std::pair<Mat<T>, Mat<T>> attention_back(const StitcherModel<T>& m, GradView<T>& g,
                                         const AttnSlots& s, const AttnCache<T>& c,
                                         const Mat<T>& dy) {
  const Eigen::Index heads = m.config.heads;
  const Mat<T> dctx = linear_back(m, g, s.o, c.ctx, dy);
  const Eigen::Index d = c.q.cols(), dh = d / heads;
  const T scale = T(1) / std::sqrt(T(dh));
  Mat<T> dq(c.q.rows(), d), dk(c.k.rows(), d), dv(c.v.rows(), d);
  for (Eigen::Index h = 0; h < heads; ++h) {
    const Mat<T>& p = c.probs[static_cast<std::size_t>(h)];
    const auto dout = dctx.middleCols(h * dh, dh);
    const Mat<T> dp = dout * c.v.middleCols(h * dh, dh).transpose();
    dv.middleCols(h * dh, dh).noalias() = p.transpose() * dout;
    const ColVec<T> rs = (dp.array() * p.array()).rowwise().sum();
    const Mat<T> ds = (p.array() * (dp.colwise() - rs).array()) * scale;
    dq.middleCols(h * dh, dh).noalias() = ds * c.k.middleCols(h * dh, dh);
    dk.middleCols(h * dh, dh).noalias() = ds.transpose() * c.q.middleCols(h * dh, dh);
  }
  Mat<T> dxq = linear_back(m, g, s.q, c.xq, dq);
  Mat<T> dxkv = linear_back(m, g, s.k, c.xkv, dk);
  dxkv += linear_back(m, g, s.v, c.xkv, dv);
  return {std::move(dxq), std::move(dxkv)};
}

template <typename T>
Mat<T> feed_forward(const StitcherModel<T>& m, const LinearSlots& ff1, const LinearSlots& ff2,
                    const Mat<T>& x, FfCache<T>& c, std::uint64_t* relu_sig) {
  c.x = x;
  c.h = linear(m, ff1, x).cwiseMax(T(0));
  if (relu_sig)
    for (Eigen::Index i = 0; i < c.h.size(); ++i)
      *relu_sig = (*relu_sig ^ (c.h.data()[i] > T(0) ? 0x9bu : 0x31u)) * 0x100000001b3ULL;
  return linear(m, ff2, c.h);
}

template <typename T>
Mat<T> feed_forward_back(const StitcherModel<T>& m, GradView<T>& g, const LinearSlots& ff1,
                         const LinearSlots& ff2, const FfCache<T>& c, const Mat<T>& dy) {
  Mat<T> dh = linear_back(m, g, ff2, c.h, dy);
  dh = (c.h.array() > T(0)).select(dh, T(0));
  return linear_back(m, g, ff1, c.x, dh);
}

// Inverted dropout. An empty mask means identity.
template <typename T>
Mat<T> dropout(const Mat<T>& x, double p, Rng* rng, Mat<T>& mask) {
  if (rng == nullptr || p <= 0.0) {
    mask.resize(0, 0);
    return x;
  }
  mask.resize(x.rows(), x.cols());
  const T keep = T(1.0 / (1.0 - p));
  // Two 32-bit draws per engine call.
  const auto thresh = static_cast<std::uint64_t>(p * 4294967296.0);
  std::uint64_t bits = 0;
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    if (i % 2 == 0) bits = rng->next();
    const auto u = (i % 2 == 0 ? bits : bits >> 32) & 0xffffffffull;
    mask.data()[i] = u < thresh ? T(0) : keep;
  }
  return x.cwiseProduct(mask);
}

template <typename T>
Mat<T> dropout_back(const Mat<T>& dy, const Mat<T>& mask) {
  return mask.size() == 0 ? dy : Mat<T>(dy.cwiseProduct(mask));
}

template <typename T>
struct EncLayerCache {
  NormCache<T> ln1, ln2;
  AttnCache<T> self;
  FfCache<T> ff;
  Mat<T> d1, d2;
};

template <typename T>
struct DecLayerCache {
  NormCache<T> ln1, ln2, ln3;
  AttnCache<T> self, cross;
  FfCache<T> ff;
  Mat<T> d1, d2, d3;
};

}  // namespace detail

// Everything a forward pass keeps for the backward pass.
template <typename T>
struct Workspace {
  std::vector<std::int32_t> src_ids, odd_ids, even_ids, tgt_ids;
  Mat<T> pair_in, d_src, d_tgt, memory, hidden;
  std::vector<detail::EncLayerCache<T>> enc;
  std::vector<detail::DecLayerCache<T>> dec;
  detail::NormCache<T> enc_norm, dec_norm;
  // Hash of every ReLU on/off state, kept only when track_relu is set.
  bool track_relu = false;
  std::uint64_t relu_signature = 0xcbf29ce484222325ULL;
};

namespace detail {

inline std::int32_t checked_id(Token t, std::int32_t vocab_size) {
  if (t.id < 0 || t.id >= vocab_size)
    throw Error(ErrorKind::InvalidArgument, "token id outside the model vocabulary");
  return t.id;
}

// Embedding rows are scaled by sqrt(model_dim) on lookup.
template <typename T>
T embed_scale(const StitcherModel<T>& m) {
  return std::sqrt(T(m.config.model_dim));
}

template <typename T>
void gather_rows(const StitcherModel<T>& m, const Slot& table, const std::vector<std::int32_t>& ids,
                 Mat<T>& out, Eigen::Index col0) {
  const auto e = m.mat(table);
  const T sc = embed_scale(m);
  for (std::size_t i = 0; i < ids.size(); ++i)
    out.block(static_cast<Eigen::Index>(i), col0, 1, e.cols()) = e.row(ids[i]) * sc;
}

template <typename T>
void scatter_rows(const StitcherModel<T>& m, GradView<T>& g, const Slot& table,
                  const std::vector<std::int32_t>& ids, const Mat<T>& d, Eigen::Index col0) {
  auto e = g.mat(table);
  const T sc = embed_scale(m);
  for (std::size_t i = 0; i < ids.size(); ++i)
    e.row(ids[i]) += d.block(static_cast<Eigen::Index>(i), col0, 1, e.cols()) * sc;
}

template <typename T>
Mat<T> output_logits(const StitcherModel<T>& m, const Mat<T>& h) {
  const auto& out = m.layout.out;
  if (!m.layout.shared) return linear(m, out, h);
  Mat<T> y = h * m.mat(out.w).transpose();
  y.rowwise() += m.row(out.b);
  return y;
}

template <typename T>
Mat<T> output_back(const StitcherModel<T>& m, GradView<T>& g, const Mat<T>& h, const Mat<T>& dy) {
  const auto& out = m.layout.out;
  if (!m.layout.shared) return linear_back(m, g, out, h, dy);
  g.mat(out.w).noalias() += dy.transpose() * h;
  g.row(out.b) += dy.colwise().sum();
  return dy * m.mat(out.w);
}

}  // namespace detail

// Encoder. Fills ws.memory (source length x model_dim). Pass a dropout rng
// for training mode, nullptr for evaluation.
template <typename T>
const Mat<T>& encode(const StitcherModel<T>& m, const StitcherInput& in, Workspace<T>& ws,
                     Rng* drop) {
  const auto& cfg = m.config;
  const auto& lay = m.layout;
  if (in.variant != cfg.variant)
    throw Error(ErrorKind::InvalidArgument, "input variant does not match the model");
  const auto len = static_cast<Eigen::Index>(in.length());
  require(len >= 1, "empty stitcher input");
  require(len <= cfg.max_src_len, "stitcher input longer than max_src_len");
  const Eigen::Index d = cfg.model_dim;

  Mat<T> x(len, d);
  if (in.variant == Variant::AlignPairs) {
    ws.odd_ids.clear();
    ws.even_ids.clear();
    for (const auto& p : in.pairs) {
      ws.odd_ids.push_back(p.odd ? detail::checked_id(p.odd->token, cfg.vocab_size) : 0);
      ws.even_ids.push_back(p.even ? detail::checked_id(p.even->token, cfg.vocab_size) : 0);
    }
    ws.pair_in.resize(len, 2 * d);
    detail::gather_rows(m, lay.src_embed, ws.odd_ids, ws.pair_in, 0);
    detail::gather_rows(m, lay.src_embed, ws.even_ids, ws.pair_in, d);
    x = detail::linear(m, *lay.pair_proj, ws.pair_in);
  } else {
    ws.src_ids.clear();
    for (auto t : in.tokens) ws.src_ids.push_back(detail::checked_id(t, cfg.vocab_size));
    detail::gather_rows(m, lay.src_embed, ws.src_ids, x, 0);
  }
  x += positional_encoding<T>(len, d);
  x = detail::dropout(x, cfg.dropout, drop, ws.d_src);

  ws.enc.resize(lay.enc.size());
  for (std::size_t l = 0; l < lay.enc.size(); ++l) {
    const auto& s = lay.enc[l];
    auto& c = ws.enc[l];
    Mat<T> h = detail::layer_norm(m, s.ln1, x, c.ln1);
    x += detail::dropout(detail::attention(m, s.self, h, h, false, c.self), cfg.dropout, drop, c.d1);
    h = detail::layer_norm(m, s.ln2, x, c.ln2);
    x += detail::dropout(detail::feed_forward(m, s.ff1, s.ff2, h, c.ff, ws.track_relu ? &ws.relu_signature : nullptr),
                         cfg.dropout, drop, c.d2);
  }
  ws.memory = detail::layer_norm(m, lay.enc_norm, x, ws.enc_norm);
  return ws.memory;
}

// Decoder over <s> followed by prefix, attending to ws.memory. Row t of the
// result scores the (t+1)-th output token; columns are output classes.
template <typename T>
Mat<T> decode_logits(const StitcherModel<T>& m, const TokenSeq& prefix, Workspace<T>& ws,
                     Rng* drop) {
  const auto& cfg = m.config;
  const auto& lay = m.layout;
  const auto len = static_cast<Eigen::Index>(prefix.size() + 1);
  require(len <= cfg.max_tgt_len, "target longer than max_tgt_len");
  const Eigen::Index d = cfg.model_dim;

  ws.tgt_ids.assign(1, static_cast<std::int32_t>(Special::Bos));
  for (auto t : prefix) ws.tgt_ids.push_back(detail::checked_id(t, cfg.vocab_size));
  Mat<T> y(len, d);
  detail::gather_rows(m, lay.tgt_embed, ws.tgt_ids, y, 0);
  y += positional_encoding<T>(len, d);
  y = detail::dropout(y, cfg.dropout, drop, ws.d_tgt);

  ws.dec.resize(lay.dec.size());
  for (std::size_t l = 0; l < lay.dec.size(); ++l) {
    const auto& s = lay.dec[l];
    auto& c = ws.dec[l];
    Mat<T> h = detail::layer_norm(m, s.ln1, y, c.ln1);
    y += detail::dropout(detail::attention(m, s.self, h, h, true, c.self), cfg.dropout, drop, c.d1);
    h = detail::layer_norm(m, s.ln2, y, c.ln2);
    y += detail::dropout(detail::attention(m, s.cross, h, ws.memory, false, c.cross), cfg.dropout,
                         drop, c.d2);
    h = detail::layer_norm(m, s.ln3, y, c.ln3);
    y += detail::dropout(detail::feed_forward(m, s.ff1, s.ff2, h, c.ff, ws.track_relu ? &ws.relu_signature : nullptr),
                         cfg.dropout, drop, c.d3);
  }
  ws.hidden = detail::layer_norm(m, lay.dec_norm, y, ws.dec_norm);
  return detail::output_logits(m, ws.hidden);
}

// Accumulates d(loss)/d(params) into grads given d(loss)/d(logits) for the
// last encode + decode_logits run on ws.
template <typename T>
void backward(const StitcherModel<T>& m, const Workspace<T>& ws, const Mat<T>& dlogits,
              ParamVec<T>& grads) {
  const auto& lay = m.layout;
  require(grads.size() == m.params.size(), "gradient buffer has the wrong size");
  GradView<T> g{grads};

  Mat<T> dy = detail::output_back(m, g, ws.hidden, dlogits);
  dy = detail::layer_norm_back(m, g, lay.dec_norm, ws.dec_norm, dy);
  Mat<T> dmem = Mat<T>::Zero(ws.memory.rows(), ws.memory.cols());
  for (std::size_t l = lay.dec.size(); l-- > 0;) {
    const auto& s = lay.dec[l];
    const auto& c = ws.dec[l];
    Mat<T> dh = detail::feed_forward_back(m, g, s.ff1, s.ff2, c.ff, detail::dropout_back(dy, c.d3));
    dy += detail::layer_norm_back(m, g, s.ln3, c.ln3, dh);
    auto [dq, dkv] = detail::attention_back(m, g, s.cross, c.cross, detail::dropout_back(dy, c.d2));
    dmem += dkv;
    dy += detail::layer_norm_back(m, g, s.ln2, c.ln2, dq);
    auto [sq, skv] = detail::attention_back(m, g, s.self, c.self, detail::dropout_back(dy, c.d1));
    sq += skv;
    dy += detail::layer_norm_back(m, g, s.ln1, c.ln1, sq);
  }
  dy = detail::dropout_back(dy, ws.d_tgt);
  detail::scatter_rows(m, g, lay.tgt_embed, ws.tgt_ids, dy, 0);

  Mat<T> dx = detail::layer_norm_back(m, g, lay.enc_norm, ws.enc_norm, dmem);
  for (std::size_t l = lay.enc.size(); l-- > 0;) {
    const auto& s = lay.enc[l];
    const auto& c = ws.enc[l];
    Mat<T> dh = detail::feed_forward_back(m, g, s.ff1, s.ff2, c.ff, detail::dropout_back(dx, c.d2));
    dx += detail::layer_norm_back(m, g, s.ln2, c.ln2, dh);
    auto [dq, dkv] = detail::attention_back(m, g, s.self, c.self, detail::dropout_back(dx, c.d1));
    dq += dkv;
    dx += detail::layer_norm_back(m, g, s.ln1, c.ln1, dq);
  }
  dx = detail::dropout_back(dx, ws.d_src);
  if (m.config.variant == Variant::AlignPairs) {
    const Mat<T> dp = detail::linear_back(m, g, *lay.pair_proj, ws.pair_in, dx);
    detail::scatter_rows(m, g, lay.src_embed, ws.odd_ids, dp, 0);
    detail::scatter_rows(m, g, lay.src_embed, ws.even_ids, dp, m.config.model_dim);
  } else {
    detail::scatter_rows(m, g, lay.src_embed, ws.src_ids, dx, 0);
  }
}

// Teacher-forced logits for every position of <s> + target_prefix.
template <typename T>
Mat<T> forward(const StitcherModel<T>& m, const StitcherInput& in, const TokenSeq& target_prefix,
               bool train_mode, std::uint64_t seed) {
  Workspace<T> ws;
  Rng rng(seed);
  Rng* drop = train_mode ? &rng : nullptr;
  encode(m, in, ws, drop);
  return decode_logits(m, target_prefix, ws, drop);
}

}  // namespace hstitch::nn
