#pragma once

#include <cmath>
#include <cstdint>

#include "hstitch/error.hpp"
#include "hstitch/stitcher_encoding.hpp"
#include "hstitch/vocabulary.hpp"

namespace hstitch::nn {

// Desk-scale defaults; a 6+6 layer, 1024-dim, 8-head setting is reachable
// through the same fields (see StitcherConfig::large()).
struct StitcherConfig {
  Variant variant = Variant::SerialWcoe;
  std::int32_t enc_layers = 2;
  std::int32_t dec_layers = 2;
  std::int32_t model_dim = 64;
  std::int32_t heads = 2;
  std::int32_t ff_dim = 128;
  double dropout = 0.1;
  double label_smoothing = 0.1;
  double lr = 0.0005;
  // Linear warmup to lr over this many updates, then lr * sqrt(warmup / step).
  // Zero keeps lr constant.
  std::int32_t warmup_steps = 0;
  std::int32_t max_src_len = 1024;
  std::int32_t max_tgt_len = 512;
  std::int32_t vocab_size = 0;  // full vocabulary size, reserved block included
  // One embedding table for source, target and the output projection.
  bool share_embeddings = true;

  // Output classes are </s> followed by every word.
  std::int32_t num_classes() const { return vocab_size - static_cast<std::int32_t>(Special::Eos); }

  double lr_at(std::int64_t step) const {
    if (warmup_steps <= 0) return lr;
    const double s = static_cast<double>(step), w = static_cast<double>(warmup_steps);
    return s < w ? lr * s / w : lr * std::sqrt(w / s);
  }

  static std::int32_t class_of(Token t) { return t.id - static_cast<std::int32_t>(Special::Eos); }
  static Token token_of(std::int32_t cls) {
    return Token(cls + static_cast<std::int32_t>(Special::Eos));
  }

  void validate() const {
    require(enc_layers >= 1 && dec_layers >= 1, "need at least one encoder and decoder layer");
    require(model_dim >= 1 && heads >= 1 && ff_dim >= 1, "dimensions must be positive");
    require(model_dim % heads == 0, "model_dim must be divisible by heads");
    require(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
    require(label_smoothing >= 0.0 && label_smoothing < 1.0,
            "label_smoothing must lie in [0, 1)");
    require(lr >= 0.0, "learning rate must be non-negative");
    require(warmup_steps >= 0, "warmup_steps must be non-negative");
    require(max_src_len >= 1 && max_tgt_len >= 1, "max lengths must be positive");
    require(vocab_size > kNumReserved, "vocabulary must contain at least one word");
  }

  static StitcherConfig large(std::int32_t vocab_size) {
    StitcherConfig c;
    c.enc_layers = c.dec_layers = 6;
    c.model_dim = 1024;
    c.heads = 8;
    c.ff_dim = 4096;
    c.dropout = 0.3;
    c.label_smoothing = 0.1;
    c.lr = 0.0005;
    c.vocab_size = vocab_size;
    return c;
  }
};

}  // namespace hstitch::nn
