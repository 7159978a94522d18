#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hstitch/error.hpp"
#include "hstitch/hypothesis.hpp"
#include "hstitch/nn/train.hpp"
#include "hstitch/pipeline.hpp"
#include "hstitch/segmenter.hpp"
#include "hstitch/stitcher_encoding.hpp"
#include "hstitch/vocabulary.hpp"

// Line-oriented JSON artifacts. Words are written as strings so every file is
// readable on its own given vocab.txt.
namespace hstitch::io {

using nlohmann::json;

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path);
  f << text;
  if (!f) throw Error(ErrorKind::Io, "failed writing " + path);
}

inline std::vector<json> parse_jsonl(const std::string& text, const std::string& what) {
  std::vector<json> out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Format, what + " line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

template <typename F>
auto guarded(const std::string& what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, what + ": " + e.what());
  }
}

// vocab.txt: one word per line, reserved symbols omitted.
inline std::string vocab_to_text(const Vocabulary& v) {
  std::string out;
  for (const auto& w : v.words()) out += w + "\n";
  return out;
}

inline Vocabulary vocab_from_text(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) words.push_back(line);
  return build_vocabulary(words);
}

inline json conversation_to_json(const Conversation& c, const Vocabulary& v, std::int32_t id) {
  json utts = json::array();
  for (const auto& u : c.utterances) {
    json words = json::array();
    for (const auto& w : u.words) words.push_back({v.render(w.word), w.start, w.end});
    utts.push_back({{"speaker", u.speaker}, {"words", std::move(words)}});
  }
  return {{"id", id}, {"num_speakers", c.num_speakers}, {"utterances", std::move(utts)}};
}

inline Conversation conversation_from_json(const json& j, const Vocabulary& v) {
  return guarded("conversation", [&] {
    Conversation c;
    c.num_speakers = j.at("num_speakers").get<std::int32_t>();
    for (const auto& u : j.at("utterances")) {
      Utterance utt;
      utt.speaker = u.at("speaker").get<SpeakerId>();
      for (const auto& w : u.at("words"))
        utt.words.push_back(
            {v.lookup(w.at(0).get<std::string>()), w.at(1).get<double>(), w.at(2).get<double>()});
      c.utterances.push_back(std::move(utt));
    }
    validate(c);
    return c;
  });
}

// windows.jsonl: one line per recording.
inline json plan_to_json(const WindowPlan& plan, std::int32_t recording) {
  json wins = json::array();
  for (const auto& w : plan.windows) wins.push_back({w.start, w.end});
  return {{"recording", recording},
          {"window_len", plan.window_len},
          {"overlap_ratio", plan.overlap_ratio},
          {"windows", std::move(wins)}};
}

inline WindowPlan plan_from_json(const json& j) {
  return guarded("windows", [&] {
    WindowPlan plan;
    plan.window_len = j.at("window_len").get<double>();
    plan.overlap_ratio = j.at("overlap_ratio").get<double>();
    std::int32_t idx = 0;
    for (const auto& w : j.at("windows"))
      plan.windows.push_back({++idx, w.at(0).get<double>(), w.at(1).get<double>()});
    require(!plan.windows.empty(), "window plan without windows", ErrorKind::Format);
    return plan;
  });
}

// hyps.jsonl: one segment hypothesis per line, tagged with its recording.
inline json hyp_to_json(const SegmentHypothesis& h, const Vocabulary& v, std::int32_t recording) {
  json tokens = json::array();
  for (auto t : h.tokens) tokens.push_back(v.render(t));
  return {{"recording", recording},
          {"window", h.window},
          {"speaker", h.speaker},
          {"tokens", std::move(tokens)}};
}

inline std::pair<std::int32_t, SegmentHypothesis> hyp_from_json(const json& j, const Vocabulary& v) {
  return guarded("hypothesis", [&] {
    SegmentHypothesis h;
    h.window = j.at("window").get<std::int32_t>();
    h.speaker = j.at("speaker").get<SpeakerId>();
    for (const auto& t : j.at("tokens")) h.tokens.push_back(v.lookup(t.get<std::string>()));
    validate(h);
    return std::pair{j.at("recording").get<std::int32_t>(), h};
  });
}

inline std::string recordings_to_jsonl(const std::vector<RecordingHyps>& recs,
                                       const Vocabulary& v, std::string* windows_jsonl) {
  std::string hyps;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto id = static_cast<std::int32_t>(i);
    if (windows_jsonl) *windows_jsonl += plan_to_json(recs[i].plan, id).dump() + "\n";
    for (const auto& h : recs[i].hyps) hyps += hyp_to_json(h, v, id).dump() + "\n";
  }
  return hyps;
}

inline std::vector<RecordingHyps> recordings_from_jsonl(const std::string& windows_jsonl,
                                                        const std::string& hyps_jsonl,
                                                        const Vocabulary& v) {
  std::vector<RecordingHyps> recs;
  for (const auto& j : parse_jsonl(windows_jsonl, "windows.jsonl")) {
    const auto id = guarded("windows", [&] { return j.at("recording").get<std::int32_t>(); });
    require(id == static_cast<std::int32_t>(recs.size()), "windows.jsonl out of order",
            ErrorKind::Format);
    recs.push_back({plan_from_json(j), {}});
  }
  for (const auto& j : parse_jsonl(hyps_jsonl, "hyps.jsonl")) {
    auto [id, h] = hyp_from_json(j, v);
    require(id >= 0 && id < static_cast<std::int32_t>(recs.size()),
            "hypothesis for unknown recording", ErrorKind::Format);
    auto& r = recs[static_cast<std::size_t>(id)];
    require(h.window <= static_cast<std::int32_t>(r.plan.size()), "window index out of range",
            ErrorKind::Format);
    r.hyps.push_back(std::move(h));
  }
  return recs;
}

inline json input_to_json(const StitcherInput& in, const Vocabulary& v) {
  if (in.variant != Variant::AlignPairs) return render(v, in.tokens);
  json pairs = json::array();
  for (const auto& p : in.pairs)
    pairs.push_back({p.odd ? json(v.render(p.odd->token)) : json(nullptr),
                     p.even ? json(v.render(p.even->token)) : json(nullptr)});
  return pairs;
}

inline StitcherInput input_from_json(const json& j, Variant variant, const Vocabulary& v) {
  StitcherInput in;
  in.variant = variant;
  if (variant != Variant::AlignPairs) {
    in.tokens = tokenize(v, j.get<std::string>());
    return in;
  }
  for (const auto& p : j) {
    AlignedPair ap;
    if (!p.at(0).is_null()) ap.odd = ProvToken{v.lookup(p.at(0).get<std::string>())};
    if (!p.at(1).is_null()) ap.even = ProvToken{v.lookup(p.at(1).get<std::string>())};
    require(ap.odd || ap.even, "aligned pair with two empty sides", ErrorKind::Format);
    in.pairs.push_back(ap);
  }
  return in;
}

struct CorpusLine {
  std::int32_t conversation = 0;
  SpeakerId speaker = 0;
  nn::TrainExample example;
};

inline json corpus_line_to_json(const CorpusLine& c, const Vocabulary& v) {
  return {{"conversation", c.conversation},
          {"speaker", c.speaker},
          {"variant", std::string(variant_name(c.example.input.variant))},
          {"input", input_to_json(c.example.input, v)},
          {"target", render(v, c.example.target)}};
}

inline CorpusLine corpus_line_from_json(const json& j, const Vocabulary& v) {
  return guarded("corpus", [&] {
    CorpusLine c;
    c.conversation = j.at("conversation").get<std::int32_t>();
    c.speaker = j.at("speaker").get<SpeakerId>();
    const auto variant = parse_variant(j.at("variant").get<std::string>());
    c.example.input = input_from_json(j.at("input"), variant, v);
    c.example.target = tokenize(v, j.at("target").get<std::string>());
    return c;
  });
}

inline json transcripts_to_json(const SpeakerTranscripts& t, const Vocabulary& v) {
  json out = json::object();
  for (const auto& [k, seq] : t) out[std::to_string(k)] = render(v, seq);
  return out;
}

inline SpeakerTranscripts transcripts_from_json(const json& j, const Vocabulary& v) {
  return guarded("transcripts", [&] {
    SpeakerTranscripts out;
    for (const auto& [k, words] : j.items()) {
      SpeakerId id = -1;
      const auto [end, ec] = std::from_chars(k.data(), k.data() + k.size(), id);
      require(ec == std::errc() && end == k.data() + k.size() && id >= 0, "bad speaker key " + k,
              ErrorKind::Format);
      out[id] = tokenize(v, words.get<std::string>());
    }
    return out;
  });
}

}  // namespace hstitch::io
