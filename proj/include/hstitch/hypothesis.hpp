#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "hstitch/error.hpp"
#include "hstitch/vocabulary.hpp"

namespace hstitch {

using SpeakerId = std::int32_t;

struct TimedWord {
  Token word;
  double start = 0.0;  // seconds
  double end = 0.0;

  double midpoint() const { return 0.5 * (start + end); }
  friend bool operator==(const TimedWord&, const TimedWord&) = default;
};

struct Utterance {
  SpeakerId speaker = 0;
  std::vector<TimedWord> words;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct Conversation {
  std::vector<Utterance> utterances;
  std::int32_t num_speakers = 0;

  double duration() const {
    double d = 0.0;
    for (const auto& u : utterances)
      for (const auto& w : u.words) d = std::max(d, w.end);
    return d;
  }

  std::size_t num_words() const {
    std::size_t n = 0;
    for (const auto& u : utterances) n += u.words.size();
    return n;
  }

  friend bool operator==(const Conversation&, const Conversation&) = default;
};

// Hypothesis of one speaker for one window. Windows are 1-based.
struct SegmentHypothesis {
  std::int32_t window = 1;
  SpeakerId speaker = 0;
  TokenSeq tokens;

  friend bool operator==(const SegmentHypothesis&, const SegmentHypothesis&) = default;
};

// All M window hypotheses of one speaker, in window order; empty slots allowed.
struct HypothesisGroup {
  SpeakerId speaker = 0;
  std::vector<TokenSeq> segments;

  std::int32_t num_windows() const { return static_cast<std::int32_t>(segments.size()); }
  friend bool operator==(const HypothesisGroup&, const HypothesisGroup&) = default;
};

using SpeakerTranscripts = std::map<SpeakerId, TokenSeq>;

inline void validate(const Conversation& conv) {
  require(conv.num_speakers >= 1, "conversation needs at least one speaker",
          ErrorKind::Format);
  for (const auto& u : conv.utterances) {
    require(u.speaker >= 0 && u.speaker < conv.num_speakers,
            "speaker id out of range", ErrorKind::Format);
    double prev_end = -1.0;
    for (const auto& w : u.words) {
      require(w.word.is_word(), "utterance holds a non-word token", ErrorKind::Format);
      require(0.0 <= w.start && w.start < w.end, "bad word span", ErrorKind::Format);
      require(w.start >= prev_end, "overlapping or unordered words in utterance",
              ErrorKind::Format);
      prev_end = w.end;
    }
  }
}

inline void validate(const SegmentHypothesis& h) {
  require(h.window >= 1, "window index must be 1-based", ErrorKind::Format);
  require(h.speaker >= 0, "negative speaker id", ErrorKind::Format);
  for (auto t : h.tokens)
    require(t.is_word(), "segment hypothesis holds a non-word token", ErrorKind::Format);
}

// Every speaker 0..K-1 gets an entry; words ordered by start time.
inline SpeakerTranscripts per_speaker_reference(const Conversation& conv) {
  struct Item {
    double start;
    std::size_t utt, idx;
    Token word;
  };
  std::vector<std::vector<Item>> items(static_cast<std::size_t>(conv.num_speakers));
  for (std::size_t u = 0; u < conv.utterances.size(); ++u) {
    const auto& utt = conv.utterances[u];
    for (std::size_t i = 0; i < utt.words.size(); ++i)
      items[static_cast<std::size_t>(utt.speaker)].push_back(
          {utt.words[i].start, u, i, utt.words[i].word});
  }
  SpeakerTranscripts out;
  for (SpeakerId k = 0; k < conv.num_speakers; ++k) {
    auto& v = items[static_cast<std::size_t>(k)];
    std::stable_sort(v.begin(), v.end(), [](const Item& a, const Item& b) {
      return std::tie(a.start, a.utt, a.idx) < std::tie(b.start, b.utt, b.idx);
    });
    TokenSeq seq;
    seq.reserve(v.size());
    for (const auto& it : v) seq.push_back(it.word);
    out.emplace(k, std::move(seq));
  }
  return out;
}

}  // namespace hstitch
