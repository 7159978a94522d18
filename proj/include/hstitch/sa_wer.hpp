#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "hstitch/error.hpp"
#include "hstitch/hypothesis.hpp"

namespace hstitch {

struct ErrorCounts {
  std::int64_t substitutions = 0;
  std::int64_t insertions = 0;
  std::int64_t deletions = 0;
  std::int64_t ref_words = 0;

  std::int64_t total() const { return substitutions + insertions + deletions; }

  ErrorCounts& operator+=(const ErrorCounts& o) {
    substitutions += o.substitutions;
    insertions += o.insertions;
    deletions += o.deletions;
    ref_words += o.ref_words;
    return *this;
  }
  friend bool operator==(const ErrorCounts&, const ErrorCounts&) = default;
};

// Levenshtein alignment of hyp against ref. The traceback prefers
// match > substitution > deletion > insertion among optimal moves.
inline ErrorCounts word_errors(const TokenSeq& hyp, const TokenSeq& ref) {
  const std::size_t n = ref.size(), m = hyp.size(), w = m + 1;
  std::vector<std::int64_t> d((n + 1) * w);
  for (std::size_t i = 0; i <= n; ++i) d[i * w] = static_cast<std::int64_t>(i);
  for (std::size_t j = 0; j <= m; ++j) d[j] = static_cast<std::int64_t>(j);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j) {
      const auto diag = d[(i - 1) * w + j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      d[i * w + j] = std::min({diag, d[(i - 1) * w + j] + 1, d[i * w + j - 1] + 1});
    }

  ErrorCounts c;
  c.ref_words = static_cast<std::int64_t>(n);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const auto here = d[i * w + j];
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (d[(i - 1) * w + j - 1] + (same ? 0 : 1) == here) {
        if (!same) ++c.substitutions;
        --i, --j;
        continue;
      }
    }
    if (i > 0 && d[(i - 1) * w + j] + 1 == here) {
      ++c.deletions;
      --i;
    } else {
      ++c.insertions;
      --j;
    }
  }
  return c;
}

// Speakers are matched by identity. A speaker present on one side only
// contributes pure insertions or pure deletions.
inline ErrorCounts sa_error_counts(const SpeakerTranscripts& hyps, const SpeakerTranscripts& refs) {
  std::set<SpeakerId> speakers;
  for (const auto& [k, _] : hyps) speakers.insert(k);
  for (const auto& [k, _] : refs) speakers.insert(k);
  static const TokenSeq kEmpty;
  ErrorCounts total;
  for (auto k : speakers) {
    auto h = hyps.find(k);
    auto r = refs.find(k);
    total += word_errors(h == hyps.end() ? kEmpty : h->second,
                         r == refs.end() ? kEmpty : r->second);
  }
  return total;
}

inline double sa_wer_percent(const ErrorCounts& c) {
  if (c.ref_words <= 0) throw Error(ErrorKind::InvalidArgument, "zero reference words");
  return 100.0 * static_cast<double>(c.total()) / static_cast<double>(c.ref_words);
}

// Micro-averaged: total errors over total reference words.
inline double sa_wer(const SpeakerTranscripts& hyps, const SpeakerTranscripts& refs) {
  return sa_wer_percent(sa_error_counts(hyps, refs));
}

}  // namespace hstitch
