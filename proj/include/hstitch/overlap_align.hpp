#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <map>
#include <set>
#include <optional>
#include <vector>

#include "hstitch/error.hpp"
#include "hstitch/hypothesis.hpp"
#include "hstitch/vocabulary.hpp"

namespace hstitch {

// A token tagged with where it came from. For words, pos is the 1-based
// position inside its window hypothesis and seg_len the hypothesis length.
// Window-change separators carry the index of the window they close and
// pos == 0.
struct ProvToken {
  Token token;
  std::int32_t segment = 1;
  std::int32_t pos = 1;
  std::int32_t seg_len = 1;

  friend bool operator==(const ProvToken&, const ProvToken&) = default;
};

using ProvStream = std::vector<ProvToken>;

struct AlignedPair {
  std::optional<ProvToken> odd;
  std::optional<ProvToken> even;

  friend bool operator==(const AlignedPair&, const AlignedPair&) = default;
};

struct Alignment {
  std::vector<AlignedPair> pairs;
  std::int64_t cost = 0;   // in units of the objective's costs
  std::int64_t edits = 0;  // gaps plus substitutions
};

struct OddEvenStreams {
  ProvStream odd;
  ProvStream even;
};

inline OddEvenStreams concat_odd_even(const HypothesisGroup& group, bool with_wc) {
  require(group.num_windows() >= 1, "hypothesis group has no windows");
  OddEvenStreams s;
  for (std::int32_t m = 1; m <= group.num_windows(); ++m) {
    const auto& seg = group.segments[static_cast<std::size_t>(m - 1)];
    auto& dst = (m % 2 == 1) ? s.odd : s.even;
    const auto len = static_cast<std::int32_t>(seg.size());
    for (std::int32_t n = 1; n <= len; ++n)
      dst.push_back({seg[static_cast<std::size_t>(n - 1)], m, n, len});
    if (with_wc) dst.push_back({Token(Special::Wc), m, 0, len});
  }
  return s;
}

// Objective of the constrained alignment.
//   MatchFirst:  maximise exact matches, then prefer pairing two mismatched
//                tokens over leaving both unpaired (gap = W, substitution =
//                2W - 1 with W larger than any substitution count).
//   Levenshtein: unit gap and substitution costs.
enum class AlignObjective { MatchFirst, Levenshtein };

struct AlignOptions {
  AlignObjective objective = AlignObjective::MatchFirst;
  // Treat two adjacent windows whose word hypotheses share no word as not
  // overlapping for this speaker (separators may still pair).
  bool require_shared_word = true;
};

inline constexpr std::int64_t kInfCost = std::numeric_limits<std::int64_t>::max() / 4;

// Cost model of one alignment problem. Tokens from windows that are not
// adjacent can never be paired.
class PairCostModel {
 public:
  PairCostModel(const ProvStream& odd, const ProvStream& even, const AlignOptions& opt = {}) {
    const auto n = static_cast<std::int64_t>(odd.size());
    const auto m = static_cast<std::int64_t>(even.size());
    if (opt.objective == AlignObjective::Levenshtein) {
      gap_ = 1;
      sub_ = 1;
    } else {
      gap_ = n + m + 1;
      sub_ = 2 * gap_ - 1;
    }
    if (opt.require_shared_word) {
      std::map<std::int32_t, std::set<Token>> words;
      std::int32_t max_seg = 0;
      for (const auto* s : {&odd, &even})
        for (const auto& t : *s) {
          max_seg = std::max(max_seg, t.segment);
          if (t.token.is_word()) words[t.segment].insert(t.token);
        }
      linked_.assign(static_cast<std::size_t>(max_seg) + 2, false);
      for (std::int32_t a = 1; a < max_seg; ++a) {
        const auto lo = words.find(a), hi = words.find(a + 1);
        if (lo == words.end() || hi == words.end()) continue;
        for (auto t : lo->second)
          if (hi->second.count(t)) {
            linked_[static_cast<std::size_t>(a)] = true;
            break;
          }
      }
    }
  }

  std::int64_t gap() const { return gap_; }
  std::int64_t substitution() const { return sub_; }

  bool pairable(const ProvToken& o, const ProvToken& e) const {
    if (std::abs(o.segment - e.segment) != 1) return false;
    if (linked_.empty() || (o.token.is_separator() && e.token.is_separator())) return true;
    return linked_[static_cast<std::size_t>(std::min(o.segment, e.segment))];
  }

  std::int64_t pair(const ProvToken& o, const ProvToken& e) const {
    if (!pairable(o, e)) return kInfCost;
    return o.token == e.token ? 0 : sub_;
  }

 private:
  std::int64_t gap_ = 1;
  std::int64_t sub_ = 1;
  std::vector<bool> linked_;
};

inline std::int64_t edit_count(const std::vector<AlignedPair>& pairs) {
  std::int64_t n = 0;
  for (const auto& p : pairs)
    if (!p.odd || !p.even || !(p.odd->token == p.even->token)) ++n;
  return n;
}

// Total cost of a given pair sequence under the model; kInfCost if any pair is
// forbidden.
inline std::int64_t alignment_cost(const std::vector<AlignedPair>& pairs,
                                   const PairCostModel& model) {
  std::int64_t c = 0;
  for (const auto& p : pairs) {
    if (p.odd && p.even) {
      const auto pc = model.pair(*p.odd, *p.even);
      if (pc >= kInfCost) return kInfCost;
      c += pc;
    } else {
      c += model.gap();
    }
  }
  return c;
}

// Minimum-cost alignment. Among optimal alignments the traceback (from the
// end) prefers a match, then a gap, then a substitution; between an odd-side
// and an even-side gap it takes the token from the later window first, so
// unpaired runs come out in window order.
inline Alignment align(const ProvStream& odd, const ProvStream& even,
                       const AlignOptions& opt = {}) {
  const PairCostModel model(odd, even, opt);
  const std::size_t n = odd.size(), m = even.size();
  const std::size_t w = m + 1;
  const auto gap = model.gap();
  std::vector<std::int64_t> d((n + 1) * w, kInfCost);
  auto at = [&](std::size_t i, std::size_t j) -> std::int64_t& { return d[i * w + j]; };
  at(0, 0) = 0;
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t j = 0; j <= m; ++j) {
      if (i == 0 && j == 0) continue;
      std::int64_t best = kInfCost;
      if (i > 0 && j > 0) {
        const auto pc = model.pair(odd[i - 1], even[j - 1]);
        if (pc < kInfCost) best = std::min(best, at(i - 1, j - 1) + pc);
      }
      if (i > 0) best = std::min(best, at(i - 1, j) + gap);
      if (j > 0) best = std::min(best, at(i, j - 1) + gap);
      at(i, j) = best;
    }
  }

  Alignment out;
  out.cost = at(n, m);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const auto here = at(i, j);
    std::int64_t pc = kInfCost;
    if (i > 0 && j > 0) pc = model.pair(odd[i - 1], even[j - 1]);
    const bool odd_gap = i > 0 && at(i - 1, j) + gap == here;
    const bool even_gap = j > 0 && at(i, j - 1) + gap == here;
    if (pc == 0 && at(i - 1, j - 1) == here) {
      out.pairs.push_back({odd[i - 1], even[j - 1]});
      --i, --j;
    } else if (odd_gap && (!even_gap || odd[i - 1].segment > even[j - 1].segment)) {
      out.pairs.push_back({odd[i - 1], std::nullopt});
      --i;
    } else if (even_gap) {
      out.pairs.push_back({std::nullopt, even[j - 1]});
      --j;
    } else {
      out.pairs.push_back({odd[i - 1], even[j - 1]});
      --i, --j;
    }
  }
  std::reverse(out.pairs.begin(), out.pairs.end());
  out.edits = edit_count(out.pairs);
  return out;
}

// Position-based confidence of the n-th word (1-based) in a window
// hypothesis of C words: highest in the middle of the window.
inline double confidence(std::int32_t pos, std::int32_t seg_len) {
  require(seg_len >= 1, "segment length must be >= 1");
  require(pos >= 1 && pos <= seg_len, "word position out of range");
  return -std::abs(static_cast<double>(pos) / static_cast<double>(seg_len) - 0.5);
}

// Separators and empty sides score -inf, so they only win against each other.
inline double selection_score(const std::optional<ProvToken>& t) {
  if (!t || !t->token.is_word()) return -std::numeric_limits<double>::infinity();
  return confidence(t->pos, t->seg_len);
}

inline TokenSeq select_words(const std::vector<AlignedPair>& pairs) {
  TokenSeq out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    const auto& winner = selection_score(p.odd) >= selection_score(p.even) ? p.odd : p.even;
    if (winner && winner->token.is_word()) out.push_back(winner->token);
  }
  return out;
}

inline TokenSeq overlapping_inference(const HypothesisGroup& group,
                                      const AlignOptions& opt = {}) {
  const auto streams = concat_odd_even(group, false);
  return select_words(align(streams.odd, streams.even, opt).pairs);
}

}  // namespace hstitch
