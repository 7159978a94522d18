#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hstitch/error.hpp"
#include "hstitch/hypothesis.hpp"
#include "hstitch/overlap_align.hpp"

namespace hstitch {

enum class Variant { AlignPairs, SerialWc, SerialWcoe };

inline std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::AlignPairs: return "align_pairs";
    case Variant::SerialWc: return "serial_wc";
    case Variant::SerialWcoe: return "serial_wcoe";
  }
  return "?";
}

inline Variant parse_variant(std::string_view s) {
  if (s == "align_pairs") return Variant::AlignPairs;
  if (s == "serial_wc") return Variant::SerialWc;
  if (s == "serial_wcoe") return Variant::SerialWcoe;
  throw Error(ErrorKind::InvalidArgument, "unknown stitcher variant: " + std::string(s));
}

// Exactly one payload is populated: pairs for AlignPairs, tokens otherwise.
struct StitcherInput {
  Variant variant = Variant::SerialWc;
  std::vector<AlignedPair> pairs;
  TokenSeq tokens;

  std::size_t length() const {
    return variant == Variant::AlignPairs ? pairs.size() : tokens.size();
  }
  friend bool operator==(const StitcherInput&, const StitcherInput&) = default;
};

inline StitcherInput encode_alignment_pairs(const HypothesisGroup& group) {
  const auto streams = concat_odd_even(group, true);
  StitcherInput in;
  in.variant = Variant::AlignPairs;
  in.pairs = align(streams.odd, streams.even).pairs;
  return in;
}

// Window hypotheses joined with a separator between consecutive windows
// (M - 1 separators). With marked = true the separator after window j is
// <WCO> for odd j and <WCE> for even j.
inline StitcherInput encode_serialized(const HypothesisGroup& group, bool marked) {
  const auto M = group.num_windows();
  require(M >= 1, "hypothesis group has no windows");
  StitcherInput in;
  in.variant = marked ? Variant::SerialWcoe : Variant::SerialWc;
  for (std::int32_t j = 1; j <= M; ++j) {
    const auto& seg = group.segments[static_cast<std::size_t>(j - 1)];
    in.tokens.insert(in.tokens.end(), seg.begin(), seg.end());
    if (j == M) break;
    if (!marked)
      in.tokens.push_back(Token(Special::Wc));
    else
      in.tokens.push_back(Token(j % 2 == 1 ? Special::Wco : Special::Wce));
  }
  return in;
}

inline StitcherInput encode(const HypothesisGroup& group, Variant v) {
  switch (v) {
    case Variant::AlignPairs: return encode_alignment_pairs(group);
    case Variant::SerialWc: return encode_serialized(group, false);
    case Variant::SerialWcoe: return encode_serialized(group, true);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown stitcher variant");
}

}  // namespace hstitch
