#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "hstitch/error.hpp"
#include "hstitch/hypothesis.hpp"
#include "hstitch/rng.hpp"
#include "hstitch/segmenter.hpp"
#include "hstitch/vocabulary.hpp"

namespace hstitch {

struct SimConfig {
  std::int32_t num_speakers_max = 6;
  std::int32_t utterances_max = 12;
  double target_overlap_ratio = 0.10;
  double word_duration_mean = 0.4;    // seconds
  double word_duration_jitter = 0.1;  // uniform +/- around the mean
  std::int32_t utterance_words_min = 5;
  std::int32_t utterance_words_max = 20;
  double pause_min = 0.1;  // silence between non-overlapping utterances
  double pause_max = 0.6;
  std::int32_t vocab_size = 100;

  void validate() const {
    require(num_speakers_max >= 1, "num_speakers_max must be >= 1");
    require(utterances_max >= 1, "utterances_max must be >= 1");
    require(target_overlap_ratio >= 0.0 && target_overlap_ratio < 1.0,
            "target_overlap_ratio must lie in [0, 1)");
    require(word_duration_mean > 0.0 && word_duration_jitter >= 0.0 &&
                word_duration_jitter < word_duration_mean,
            "word duration must stay positive");
    require(utterance_words_min >= 1 && utterance_words_max >= utterance_words_min,
            "bad utterance length bounds");
    require(pause_min >= 0.0 && pause_max >= pause_min, "bad pause bounds");
    require(vocab_size >= 2, "vocab_size must be >= 2");
  }
};

struct ErrorConfig {
  double p_sub = 0.08;
  double p_del = 0.04;
  double p_ins = 0.02;
  double edge_boost = 3.0;  // multiplier inside the edge zone of a window
  double edge_zone = 2.0;   // seconds from either window boundary
  double p_speaker_confusion = 0.03;
  std::uint64_t seed = 0;

  void validate() const {
    for (double p : {p_sub, p_del, p_ins, p_speaker_confusion})
      require(p >= 0.0 && p <= 1.0, "error probabilities must lie in [0, 1]");
    require(edge_boost >= 1.0, "edge_boost must be >= 1");
    require(edge_zone >= 0.0, "edge_zone must be non-negative");
  }

  static ErrorConfig noiseless(std::uint64_t seed = 0) {
    ErrorConfig c;
    c.p_sub = c.p_del = c.p_ins = c.p_speaker_confusion = 0.0;
    c.seed = seed;
    return c;
  }
};

// Synthetic word list "w000", "w001", ...
inline Vocabulary simulation_vocabulary(std::int32_t vocab_size) {
  require(vocab_size >= 1, "vocab_size must be >= 1");
  Vocabulary v;
  char buf[16];
  for (std::int32_t i = 0; i < vocab_size; ++i) {
    std::snprintf(buf, sizeof buf, "w%03d", i);
    v.add(buf);
  }
  return v;
}

// Time with >= 2 distinct speakers active over time with >= 1 active.
inline double overlap_ratio(const Conversation& conv) {
  struct Event {
    double t;
    int delta;
    SpeakerId spk;
  };
  std::vector<Event> events;
  for (const auto& u : conv.utterances)
    for (const auto& w : u.words) {
      events.push_back({w.start, +1, u.speaker});
      events.push_back({w.end, -1, u.speaker});
    }
  if (events.empty()) throw Error(ErrorKind::InvalidArgument, "empty conversation");
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return std::tie(a.t, a.delta, a.spk) < std::tie(b.t, b.delta, b.spk);
  });
  std::map<SpeakerId, int> active;
  int speaking = 0;
  double speech = 0.0, overlap = 0.0;
  for (std::size_t i = 0; i < events.size();) {
    const double t = events[i].t;
    for (; i < events.size() && events[i].t == t; ++i) {
      int& c = active[events[i].spk];
      const bool was = c > 0;
      c += events[i].delta;
      const bool is = c > 0;
      speaking += static_cast<int>(is) - static_cast<int>(was);
    }
    if (i == events.size()) break;
    const double span = events[i].t - t;
    if (speaking >= 1) speech += span;
    if (speaking >= 2) overlap += span;
  }
  if (speech <= 0.0) throw Error(ErrorKind::InvalidArgument, "empty conversation");
  return overlap / speech;
}

namespace detail {

// Probability that a generated conversation has at least two speakers. The
// per-conversation overlap target is scaled by its inverse so the corpus-level
// mean lands on target_overlap_ratio.
inline double multi_speaker_probability(const SimConfig& cfg) {
  double p = 0.0;
  for (std::int32_t u = 1; u <= cfg.utterances_max; ++u) {
    const auto kmax = std::min(cfg.num_speakers_max, u);
    p += 1.0 - 1.0 / static_cast<double>(kmax);
  }
  return p / static_cast<double>(cfg.utterances_max);
}

}  // namespace detail

inline Conversation generate_conversation(const SimConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const auto num_utts = static_cast<std::int32_t>(rng.uniform_int(1, cfg.utterances_max));
  const auto num_spk = static_cast<std::int32_t>(
      rng.uniform_int(1, std::min(cfg.num_speakers_max, num_utts)));

  // Random surjection of utterances onto speakers.
  std::vector<SpeakerId> speakers;
  for (SpeakerId k = 0; k < num_spk; ++k) speakers.push_back(k);
  while (static_cast<std::int32_t>(speakers.size()) < num_utts)
    speakers.push_back(static_cast<SpeakerId>(rng.uniform_int(0, num_spk - 1)));
  for (std::size_t i = speakers.size(); i > 1; --i)
    std::swap(speakers[i - 1], speakers[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);

  const double p_multi = detail::multi_speaker_probability(cfg);
  const double rho = p_multi > 0.0 ? std::min(0.9, cfg.target_overlap_ratio / p_multi) : 0.0;
  const double overlap_share = rho / (1.0 + rho);

  Conversation conv;
  conv.num_speakers = num_spk;
  double floor_end = 0.0;  // latest end over utterances before the previous one
  double total_dur = 0.0, total_overlap = 0.0;
  for (std::int32_t i = 0; i < num_utts; ++i) {
    Utterance utt;
    utt.speaker = speakers[static_cast<std::size_t>(i)];
    const auto n = rng.uniform_int(cfg.utterance_words_min, cfg.utterance_words_max);
    std::vector<double> durs;
    double dur = 0.0;
    for (std::int64_t j = 0; j < n; ++j) {
      durs.push_back(cfg.word_duration_mean +
                     rng.uniform(-cfg.word_duration_jitter, cfg.word_duration_jitter));
      dur += durs.back();
    }
    total_dur += dur;

    double start = rng.uniform(0.0, cfg.pause_max);
    if (i > 0) {
      const auto& prev = conv.utterances.back();
      const double prev_start = prev.words.front().start;
      const double prev_end = prev.words.back().end;
      double ov = 0.0;
      if (prev.speaker != utt.speaker) {
        const double deficit = overlap_share * total_dur - total_overlap;
        ov = rng.uniform(0.0, 2.0 * std::max(deficit, 0.0));
        ov = std::min({ov, prev_end - prev_start, dur});
      }
      if (ov > 0.0) {
        start = std::max(prev_end - ov, floor_end);
        total_overlap += std::max(0.0, prev_end - start);
      } else {
        start = prev_end + rng.uniform(cfg.pause_min, cfg.pause_max);
      }
      floor_end = std::max(floor_end, prev_end);
    }
    double t = start;
    for (double d : durs) {
      const auto w = rng.uniform_int(0, cfg.vocab_size - 1);
      utt.words.push_back({Token(kNumReserved + static_cast<std::int32_t>(w)), t, t + d});
      t += d;
    }
    conv.utterances.push_back(std::move(utt));
  }
  return conv;
}

inline ErrorConfig scaled(ErrorConfig cfg, double factor) {
  cfg.p_sub = std::min(1.0, cfg.p_sub * factor);
  cfg.p_del = std::min(1.0, cfg.p_del * factor);
  cfg.p_ins = std::min(1.0, cfg.p_ins * factor);
  cfg.p_speaker_confusion = std::min(1.0, cfg.p_speaker_confusion * factor);
  return cfg;
}

// Stand-in for running a speaker-attributed recognizer on each window. A word
// belongs to every window containing its midpoint. Each emission is corrupted
// independently: deletion, substitution by a different vocabulary word,
// attribution to a uniformly random other speaker, and insertion of a cloned
// copy right after it. Probabilities are multiplied by edge_boost (clamped to
// 1) within edge_zone seconds of either window boundary.
inline std::vector<SegmentHypothesis> apply_error_channel(const Conversation& conv,
                                                          const std::vector<Window>& windows,
                                                          const ErrorConfig& ecfg,
                                                          std::int32_t vocab_size) {
  ecfg.validate();
  require(vocab_size >= 1, "vocab_size must be >= 1");
  struct Item {
    double start;
    std::size_t utt, idx;
  };
  std::vector<Item> order;
  for (std::size_t u = 0; u < conv.utterances.size(); ++u)
    for (std::size_t i = 0; i < conv.utterances[u].words.size(); ++i)
      order.push_back({conv.utterances[u].words[i].start, u, i});
  std::sort(order.begin(), order.end(), [](const Item& a, const Item& b) {
    return std::tie(a.start, a.utt, a.idx) < std::tie(b.start, b.utt, b.idx);
  });

  std::vector<SegmentHypothesis> out;
  for (const auto& win : windows) {
    Rng rng(derive_seed(ecfg.seed, stream_id("window"), static_cast<std::uint64_t>(win.index)));
    std::map<SpeakerId, TokenSeq> emitted;
    for (const auto& it : order) {
      const auto& utt = conv.utterances[it.utt];
      const auto& w = utt.words[it.idx];
      const double mid = w.midpoint();
      if (!win.contains(mid)) continue;
      const bool edge = std::min(mid - win.start, win.end - mid) < ecfg.edge_zone;
      const double boost = edge ? ecfg.edge_boost : 1.0;
      if (rng.bernoulli(std::min(1.0, ecfg.p_del * boost))) continue;
      Token tok = w.word;
      if (rng.bernoulli(std::min(1.0, ecfg.p_sub * boost)) && vocab_size > 1) {
        auto pick = static_cast<std::int32_t>(rng.uniform_int(0, vocab_size - 2));
        if (kNumReserved + pick >= tok.id) ++pick;
        tok = Token(kNumReserved + pick);
      }
      SpeakerId spk = utt.speaker;
      if (rng.bernoulli(std::min(1.0, ecfg.p_speaker_confusion * boost)) &&
          conv.num_speakers > 1) {
        auto other = static_cast<SpeakerId>(rng.uniform_int(0, conv.num_speakers - 2));
        if (other >= spk) ++other;
        spk = other;
      }
      auto& seq = emitted[spk];
      seq.push_back(tok);
      if (rng.bernoulli(std::min(1.0, ecfg.p_ins * boost))) seq.push_back(tok);
    }
    for (auto& [spk, seq] : emitted)
      if (!seq.empty()) out.push_back({win.index, spk, std::move(seq)});
  }
  return out;
}

}  // namespace hstitch
