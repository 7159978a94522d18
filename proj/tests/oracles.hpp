#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. None of these call into the library code they check.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <tuple>
#include <vector>

#include "hstitch/overlap_align.hpp"
#include "hstitch/rng.hpp"
#include "hstitch/vocabulary.hpp"

namespace oracle {

using hstitch::ProvToken;
using hstitch::Token;
using hstitch::TokenSeq;

inline constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 8;

// Cost rules written out from scratch.
struct Rules {
  bool match_first = false;  // otherwise unit costs
  bool shared_word = false;
  std::int64_t gap = 1, sub = 1;
  std::set<std::int32_t> linked;  // a such that windows a and a+1 share a word

  Rules(const std::vector<ProvToken>& odd, const std::vector<ProvToken>& even, bool mf,
        bool sw)
      : match_first(mf), shared_word(sw) {
    if (mf) {
      gap = static_cast<std::int64_t>(odd.size() + even.size()) + 1;
      sub = 2 * gap - 1;
    }
    std::map<std::int32_t, std::set<std::int32_t>> words;
    for (const auto* s : {&odd, &even})
      for (const auto& t : *s)
        if (t.token.id >= hstitch::kNumReserved) words[t.segment].insert(t.token.id);
    for (const auto& [a, ws] : words) {
      auto nx = words.find(a + 1);
      if (nx == words.end()) continue;
      for (int w : ws)
        if (nx->second.count(w)) linked.insert(a);
    }
  }

  std::int64_t pair(const ProvToken& o, const ProvToken& e) const {
    const auto d = o.segment - e.segment;
    if (d != 1 && d != -1) return kInf;
    const bool seps = o.token.id < hstitch::kNumReserved && e.token.id < hstitch::kNumReserved;
    if (shared_word && !seps && !linked.count(std::min(o.segment, e.segment))) return kInf;
    return o.token.id == e.token.id ? 0 : sub;
  }
};

// Plain exhaustive recursion over every monotone alignment. Only usable on
// small inputs.
inline std::int64_t exhaustive_cost(const std::vector<ProvToken>& odd,
                                    const std::vector<ProvToken>& even, const Rules& r,
                                    std::size_t i = 0, std::size_t j = 0) {
  if (i == odd.size() && j == even.size()) return 0;
  std::int64_t best = kInf;
  if (i < odd.size()) best = std::min(best, r.gap + exhaustive_cost(odd, even, r, i + 1, j));
  if (j < even.size()) best = std::min(best, r.gap + exhaustive_cost(odd, even, r, i, j + 1));
  if (i < odd.size() && j < even.size()) {
    const auto c = r.pair(odd[i], even[j]);
    if (c < kInf) best = std::min(best, c + exhaustive_cost(odd, even, r, i + 1, j + 1));
  }
  return best;
}

// Shortest path through the alignment lattice with Dijkstra.
inline std::int64_t dijkstra_cost(const std::vector<ProvToken>& odd,
                                  const std::vector<ProvToken>& even, const Rules& r) {
  const std::size_t n = odd.size(), m = even.size();
  std::vector<std::int64_t> dist((n + 1) * (m + 1), kInf);
  using Item = std::tuple<std::int64_t, std::size_t, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[0] = 0;
  pq.emplace(0, 0, 0);
  while (!pq.empty()) {
    auto [d, i, j] = pq.top();
    pq.pop();
    if (d != dist[i * (m + 1) + j]) continue;
    if (i == n && j == m) return d;
    auto relax = [&](std::size_t a, std::size_t b, std::int64_t c) {
      if (c >= kInf) return;
      auto& slot = dist[a * (m + 1) + b];
      if (d + c < slot) {
        slot = d + c;
        pq.emplace(slot, a, b);
      }
    };
    if (i < n) relax(i + 1, j, r.gap);
    if (j < m) relax(i, j + 1, r.gap);
    if (i < n && j < m) relax(i + 1, j + 1, r.pair(odd[i], even[j]));
  }
  return dist[n * (m + 1) + m];
}

// Cost of a concrete pair sequence under the rules, or kInf when it is not a
// valid alignment of the two streams.
inline std::int64_t path_cost(const std::vector<hstitch::AlignedPair>& pairs,
                              const std::vector<ProvToken>& odd,
                              const std::vector<ProvToken>& even, const Rules& r) {
  std::size_t i = 0, j = 0;
  std::int64_t c = 0;
  for (const auto& p : pairs) {
    if (!p.odd && !p.even) return kInf;
    if (p.odd) {
      if (i >= odd.size() || !(*p.odd == odd[i])) return kInf;
      ++i;
    }
    if (p.even) {
      if (j >= even.size() || !(*p.even == even[j])) return kInf;
      ++j;
    }
    if (p.odd && p.even) {
      const auto pc = r.pair(*p.odd, *p.even);
      if (pc >= kInf) return kInf;
      c += pc;
    } else {
      c += r.gap;
    }
  }
  if (i != odd.size() || j != even.size()) return kInf;
  return c;
}

// Edit distance by top-down recursion with a memo table.
inline std::int64_t edit_distance(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<std::int64_t> memo((a.size() + 1) * (b.size() + 1), -1);
  std::function<std::int64_t(std::size_t, std::size_t)> go = [&](std::size_t i,
                                                                std::size_t j) -> std::int64_t {
    if (i == a.size()) return static_cast<std::int64_t>(b.size() - j);
    if (j == b.size()) return static_cast<std::int64_t>(a.size() - i);
    auto& m = memo[i * (b.size() + 1) + j];
    if (m >= 0) return m;
    m = std::min({go(i + 1, j) + 1, go(i, j + 1) + 1, go(i + 1, j + 1) + (a[i] == b[j] ? 0 : 1)});
    return m;
  };
  return go(0, 0);
}

// All sequences over {0..alphabet-1} of length <= max_len, shortest first.
inline std::vector<std::vector<int>> all_sequences(int alphabet, int max_len) {
  std::vector<std::vector<int>> out{{}};
  std::size_t from = 0;
  for (int len = 1; len <= max_len; ++len) {
    const std::size_t to = out.size();
    for (std::size_t k = from; k < to; ++k)
      for (int s = 0; s < alphabet; ++s) {
        auto v = out[k];
        v.push_back(s);
        out.push_back(std::move(v));
      }
    from = to;
  }
  return out;
}

inline TokenSeq to_tokens(const std::vector<int>& v) {
  TokenSeq out;
  for (int x : v) out.push_back(Token(hstitch::kNumReserved + x));
  return out;
}

// Random group of `max_windows` or fewer windows with short hypotheses over a
// small alphabet, so repeated and shared words are common.
inline hstitch::HypothesisGroup random_group(hstitch::Rng& rng, int max_windows, int max_tokens,
                                             int alphabet) {
  hstitch::HypothesisGroup g;
  const auto M = rng.uniform_int(1, max_windows);
  for (std::int64_t m = 0; m < M; ++m) {
    TokenSeq seg;
    const auto len = rng.uniform_int(0, max_tokens);
    for (std::int64_t k = 0; k < len; ++k)
      seg.push_back(Token(hstitch::kNumReserved + static_cast<int>(rng.uniform_int(0, alphabet - 1))));
    g.segments.push_back(std::move(seg));
  }
  return g;
}

}  // namespace oracle
