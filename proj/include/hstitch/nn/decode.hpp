#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "hstitch/error.hpp"
#include "hstitch/nn/model.hpp"
#include "hstitch/nn/transformer.hpp"

namespace hstitch::nn {

// Default output length cap: generous relative to the input, never beyond
// what the model accepts.
template <typename T>
std::int32_t default_max_output(const StitcherModel<T>& m, const StitcherInput& in) {
  const auto cap = static_cast<std::int32_t>(2 * in.length() + 8);
  return std::min(cap, m.config.max_tgt_len - 1);
}

namespace detail {

template <typename T>
ColVec<double> last_log_probs(const StitcherModel<T>& m, const TokenSeq& prefix,
                              Workspace<T>& ws) {
  const Mat<T> logits = decode_logits(m, prefix, ws, nullptr);
  const auto row = logits.row(logits.rows() - 1).template cast<double>();
  const double mx = row.maxCoeff();
  const double lse = mx + std::log((row.array() - mx).exp().sum());
  return (row.array() - lse).matrix().transpose();
}

}  // namespace detail

// Beam search over summed log-probabilities, no length normalisation.
// Ties between equal scores go to the lower token id, so width 1 reproduces
// greedy argmax decoding exactly.
template <typename T>
TokenSeq beam_decode(const StitcherModel<T>& m, const StitcherInput& in, std::int32_t width,
                     std::int32_t max_len = -1) {
  require(width >= 1, "beam width must be >= 1");
  if (max_len < 0) max_len = default_max_output(m, in);
  require(max_len >= 1, "max_len must be >= 1");
  Workspace<T> ws;
  encode(m, in, ws, nullptr);

  struct Hyp {
    TokenSeq tokens;
    double score = 0.0;
    bool done = false;
  };
  struct Cand {
    std::size_t parent;
    std::int32_t cls;  // -1 keeps a finished hypothesis as is
    double score;
  };
  const auto eos_cls = StitcherConfig::class_of(Token(Special::Eos));
  std::vector<Hyp> beam{Hyp{}};

  for (std::int32_t step = 0; step <= max_len; ++step) {
    if (std::all_of(beam.begin(), beam.end(), [](const Hyp& h) { return h.done; })) break;
    std::vector<Cand> cands;
    for (std::size_t b = 0; b < beam.size(); ++b) {
      if (beam[b].done) {
        cands.push_back({b, -1, beam[b].score});
        continue;
      }
      const auto lp = detail::last_log_probs(m, beam[b].tokens, ws);
      for (Eigen::Index c = 0; c < lp.size(); ++c) {
        // At the length cap only </s> may follow.
        if (step == max_len && c != eos_cls) continue;
        cands.push_back({b, static_cast<std::int32_t>(c), beam[b].score + lp(c)});
      }
    }
    const auto key = [&](const Cand& c) {
      return c.cls < 0 ? StitcherConfig::class_of(Token(Special::Eos)) - 1 : c.cls;
    };
    std::stable_sort(cands.begin(), cands.end(), [&](const Cand& a, const Cand& b) {
      if (a.score != b.score) return a.score > b.score;
      return key(a) < key(b);
    });
    if (cands.size() > static_cast<std::size_t>(width)) cands.resize(static_cast<std::size_t>(width));
    std::vector<Hyp> next;
    for (const auto& c : cands) {
      Hyp h = beam[c.parent];
      if (c.cls >= 0) {
        h.score = c.score;
        if (c.cls == eos_cls)
          h.done = true;
        else
          h.tokens.push_back(StitcherConfig::token_of(c.cls));
      }
      next.push_back(std::move(h));
    }
    beam = std::move(next);
  }
  return beam.front().tokens;
}

template <typename T>
TokenSeq greedy_decode(const StitcherModel<T>& m, const StitcherInput& in,
                       std::int32_t max_len = -1) {
  if (max_len < 0) max_len = default_max_output(m, in);
  require(max_len >= 1, "max_len must be >= 1");
  Workspace<T> ws;
  encode(m, in, ws, nullptr);
  const auto eos_cls = StitcherConfig::class_of(Token(Special::Eos));
  TokenSeq out;
  for (std::int32_t step = 0; step < max_len; ++step) {
    const auto lp = detail::last_log_probs(m, out, ws);
    Eigen::Index best = 0;
    lp.maxCoeff(&best);  // first maximum, i.e. lowest id on ties
    if (best == eos_cls) break;
    out.push_back(StitcherConfig::token_of(static_cast<std::int32_t>(best)));
  }
  return out;
}

}  // namespace hstitch::nn
