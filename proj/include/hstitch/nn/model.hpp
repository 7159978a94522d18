#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hstitch/error.hpp"
#include "hstitch/nn/config.hpp"
#include "hstitch/rng.hpp"

namespace hstitch::nn {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

// Flat parameter and gradient storage. Eigen peels vectorized reductions
// according to the address of the data, so plain malloc alignment would make
// float sums depend on where the vector happened to land.
template <typename T>
using ParamVec = std::vector<T, Eigen::aligned_allocator<T>>;

// Location of one parameter tensor inside the flat parameter vector.
struct Slot {
  std::size_t offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
};

struct LinearSlots {
  Slot w, b;
};
struct NormSlots {
  Slot gain, bias;
};
struct AttnSlots {
  LinearSlots q, k, v, o;
};
struct EncLayerSlots {
  NormSlots ln1;
  AttnSlots self;
  NormSlots ln2;
  LinearSlots ff1, ff2;
};
struct DecLayerSlots {
  NormSlots ln1;
  AttnSlots self;
  NormSlots ln2;
  AttnSlots cross;
  NormSlots ln3;
  LinearSlots ff1, ff2;
};

enum class Init { Zero, One, Xavier, Embedding };

struct NamedParam {
  std::string name;
  Slot slot;
  Init init;
};

struct Layout {
  Slot src_embed;
  std::optional<LinearSlots> pair_proj;  // AlignPairs only: 2*d -> d
  Slot tgt_embed;
  std::vector<EncLayerSlots> enc;
  NormSlots enc_norm;
  std::vector<DecLayerSlots> dec;
  NormSlots dec_norm;
  LinearSlots out;  // with shared embeddings out.w is the word block of the table
  bool shared = false;
  std::vector<NamedParam> named;
  std::size_t total = 0;
};

namespace detail {

class LayoutBuilder {
 public:
  Slot add(const std::string& name, Eigen::Index rows, Eigen::Index cols, Init init) {
    Slot s{layout.total, rows, cols};
    layout.total += s.size();
    layout.named.push_back({name, s, init});
    return s;
  }
  LinearSlots linear(const std::string& name, Eigen::Index in, Eigen::Index out) {
    return {add(name + ".w", in, out, Init::Xavier), add(name + ".b", 1, out, Init::Zero)};
  }
  NormSlots norm(const std::string& name, Eigen::Index d) {
    return {add(name + ".gain", 1, d, Init::One), add(name + ".bias", 1, d, Init::Zero)};
  }
  AttnSlots attn(const std::string& name, Eigen::Index d) {
    return {linear(name + ".q", d, d), linear(name + ".k", d, d), linear(name + ".v", d, d),
            linear(name + ".o", d, d)};
  }

  Layout layout;
};

}  // namespace detail

inline Layout make_layout(const StitcherConfig& cfg) {
  cfg.validate();
  detail::LayoutBuilder b;
  const Eigen::Index d = cfg.model_dim, ff = cfg.ff_dim;
  if (cfg.share_embeddings) {
    b.layout.shared = true;
    b.layout.src_embed = b.layout.tgt_embed = b.add("embed", cfg.vocab_size, d, Init::Embedding);
  } else {
    b.layout.src_embed = b.add("src_embed", cfg.vocab_size, d, Init::Embedding);
    b.layout.tgt_embed = b.add("tgt_embed", cfg.vocab_size, d, Init::Embedding);
  }
  if (cfg.variant == Variant::AlignPairs) b.layout.pair_proj = b.linear("pair_proj", 2 * d, d);
  for (std::int32_t l = 0; l < cfg.enc_layers; ++l) {
    const auto p = "enc" + std::to_string(l);
    EncLayerSlots s;
    s.ln1 = b.norm(p + ".ln1", d);
    s.self = b.attn(p + ".self", d);
    s.ln2 = b.norm(p + ".ln2", d);
    s.ff1 = b.linear(p + ".ff1", d, ff);
    s.ff2 = b.linear(p + ".ff2", ff, d);
    b.layout.enc.push_back(s);
  }
  b.layout.enc_norm = b.norm("enc_norm", d);
  for (std::int32_t l = 0; l < cfg.dec_layers; ++l) {
    const auto p = "dec" + std::to_string(l);
    DecLayerSlots s;
    s.ln1 = b.norm(p + ".ln1", d);
    s.self = b.attn(p + ".self", d);
    s.ln2 = b.norm(p + ".ln2", d);
    s.cross = b.attn(p + ".cross", d);
    s.ln3 = b.norm(p + ".ln3", d);
    s.ff1 = b.linear(p + ".ff1", d, ff);
    s.ff2 = b.linear(p + ".ff2", ff, d);
    b.layout.dec.push_back(s);
  }
  b.layout.dec_norm = b.norm("dec_norm", d);
  if (cfg.share_embeddings) {
    const auto first = static_cast<std::size_t>(Special::Eos);
    b.layout.out.w = {b.layout.src_embed.offset + first * static_cast<std::size_t>(d),
                      cfg.num_classes(), d};
    b.layout.out.b = b.add("out.b", 1, cfg.num_classes(), Init::Zero);
  } else {
    b.layout.out = b.linear("out", d, cfg.num_classes());
  }
  return std::move(b.layout);
}

inline std::size_t parameter_count(const StitcherConfig& cfg) { return make_layout(cfg).total; }

template <typename T = float>
struct StitcherModel {
  StitcherConfig config;
  Layout layout;
  ParamVec<T> params;

  Eigen::Map<const Mat<T>> mat(const Slot& s) const {
    return {params.data() + s.offset, s.rows, s.cols};
  }
  Eigen::Map<const RowVec<T>> row(const Slot& s) const {
    return {params.data() + s.offset, s.cols};
  }
};

// Xavier-uniform for projections, embeddings with standard deviation
// 1/sqrt(model_dim) (scaled back up by sqrt(model_dim) on input), unit gains
// and zero biases. Bit-identical for a given (config, seed).
template <typename T = float>
StitcherModel<T> init_model(const StitcherConfig& cfg, std::uint64_t seed) {
  StitcherModel<T> m;
  m.config = cfg;
  m.layout = make_layout(cfg);
  m.params.assign(m.layout.total, T(0));
  Rng rng(derive_seed(seed, stream_id("init")));
  for (const auto& p : m.layout.named) {
    T* dst = m.params.data() + p.slot.offset;
    const auto n = p.slot.size();
    switch (p.init) {
      case Init::Zero:
        break;
      case Init::One:
        std::fill(dst, dst + n, T(1));
        break;
      case Init::Xavier: {
        const double a = std::sqrt(6.0 / static_cast<double>(p.slot.rows + p.slot.cols));
        for (std::size_t i = 0; i < n; ++i) dst[i] = static_cast<T>(rng.uniform(-a, a));
        break;
      }
      case Init::Embedding: {
        const double a = std::sqrt(3.0 / static_cast<double>(p.slot.cols));
        for (std::size_t i = 0; i < n; ++i) dst[i] = static_cast<T>(rng.uniform(-a, a));
        break;
      }
    }
  }
  return m;
}

template <typename To, typename From>
StitcherModel<To> cast_model(const StitcherModel<From>& m) {
  StitcherModel<To> out;
  out.config = m.config;
  out.layout = m.layout;
  out.params.assign(m.params.begin(), m.params.end());
  return out;
}

template <typename T>
bool all_finite(const StitcherModel<T>& m) {
  for (T v : m.params)
    if (!std::isfinite(static_cast<double>(v))) return false;
  return true;
}

}  // namespace hstitch::nn
