#include <gtest/gtest.h>

#include "hstitch/conversation_sim.hpp"
#include "hstitch/overlap_align.hpp"
#include "hstitch/pipeline.hpp"
#include "oracles.hpp"

using namespace hstitch;

namespace {

Vocabulary abc() { return build_vocabulary({"a", "b", "c", "d", "the", "cat", "sat", "hat", "x"}); }

HypothesisGroup group_of(const Vocabulary& v, std::vector<std::string> segs) {
  HypothesisGroup g;
  for (const auto& s : segs) g.segments.push_back(tokenize(v, s));
  return g;
}

ProvToken pt(const Vocabulary& v, const std::string& w, int seg, int pos = 1, int len = 1) {
  return {v.lookup(w), seg, pos, len};
}

}  // namespace

TEST(ConcatOddEven, SplitsByParity) {
  const auto v = abc();
  const auto s = concat_odd_even(group_of(v, {"a b", "c", "d"}), false);
  ASSERT_EQ(s.odd.size(), 3u);
  ASSERT_EQ(s.even.size(), 1u);
  EXPECT_EQ(s.odd[0], (ProvToken{v.lookup("a"), 1, 1, 2}));
  EXPECT_EQ(s.odd[1], (ProvToken{v.lookup("b"), 1, 2, 2}));
  EXPECT_EQ(s.odd[2], (ProvToken{v.lookup("d"), 3, 1, 1}));
  EXPECT_EQ(s.even[0], (ProvToken{v.lookup("c"), 2, 1, 1}));
}

TEST(ConcatOddEven, SeparatorsCloseEachWindow) {
  const auto v = abc();
  const auto s = concat_odd_even(group_of(v, {"a b", "c", "d"}), true);
  TokenSeq odd, even;
  for (auto& t : s.odd) odd.push_back(t.token);
  for (auto& t : s.even) even.push_back(t.token);
  EXPECT_EQ(render(v, odd), "a b <WC> d <WC>");
  EXPECT_EQ(render(v, even), "c <WC>");
  EXPECT_EQ(s.odd[2].segment, 1);
  EXPECT_EQ(s.odd[4].segment, 3);
}

TEST(ConcatOddEven, SingleWindowLeavesEvenEmpty) {
  const auto v = abc();
  EXPECT_TRUE(concat_odd_even(group_of(v, {"a b"}), false).even.empty());
}

TEST(Align, SharedWordExample) {
  const auto v = abc();
  ProvStream odd{pt(v, "the", 1, 1, 2), pt(v, "cat", 1, 2, 2)};
  ProvStream even{pt(v, "cat", 2, 1, 2), pt(v, "sat", 2, 2, 2)};
  for (auto obj : {AlignObjective::Levenshtein, AlignObjective::MatchFirst}) {
    const auto a = align(odd, even, {obj, true});
    ASSERT_EQ(a.pairs.size(), 3u);
    EXPECT_EQ(a.pairs[0], (AlignedPair{odd[0], std::nullopt}));
    EXPECT_EQ(a.pairs[1], (AlignedPair{odd[1], even[0]}));
    EXPECT_EQ(a.pairs[2], (AlignedPair{std::nullopt, even[1]}));
    EXPECT_EQ(a.edits, 2);
  }
  EXPECT_EQ(align(odd, even, {AlignObjective::Levenshtein, false}).cost, 2);
}

TEST(Align, IdenticalStreamsMatchFully) {
  const auto v = abc();
  ProvStream odd{pt(v, "a", 1), pt(v, "b", 1)}, even{pt(v, "a", 2), pt(v, "b", 2)};
  const auto a = align(odd, even);
  EXPECT_EQ(a.cost, 0);
  ASSERT_EQ(a.pairs.size(), 2u);
  for (const auto& p : a.pairs) EXPECT_TRUE(p.odd && p.even);
}

TEST(Align, NonAdjacentWindowsNeverPair) {
  const auto v = abc();
  ProvStream odd{pt(v, "a", 1)}, even{pt(v, "a", 4)};
  for (bool sw : {false, true}) {
    const auto a = align(odd, even, {AlignObjective::Levenshtein, sw});
    EXPECT_EQ(a.cost, 2);
    for (const auto& p : a.pairs) EXPECT_FALSE(p.odd && p.even);
  }
}

TEST(Align, EmptyStreams) {
  const auto a = align({}, {});
  EXPECT_TRUE(a.pairs.empty());
  EXPECT_EQ(a.cost, 0);
}

TEST(Align, MatchesOraclesOnRandomInstances) {
  Rng rng(11);
  for (int it = 0; it < 400; ++it) {
    const auto g = oracle::random_group(rng, 8, 6, 3);
    const bool wc = rng.bernoulli(0.5);
    const auto s = concat_odd_even(g, wc);
    for (auto obj : {AlignObjective::Levenshtein, AlignObjective::MatchFirst})
      for (bool sw : {false, true}) {
        const oracle::Rules rules(s.odd, s.even, obj == AlignObjective::MatchFirst, sw);
        const auto a = align(s.odd, s.even, {obj, sw});
        const auto best = oracle::dijkstra_cost(s.odd, s.even, rules);
        ASSERT_EQ(a.cost, best);
        ASSERT_EQ(oracle::path_cost(a.pairs, s.odd, s.even, rules), best);
      }
  }
}

TEST(Align, ExhaustiveOracleOnSmallInstances) {
  Rng rng(12);
  for (int it = 0; it < 300; ++it) {
    const auto g = oracle::random_group(rng, 4, 2, 2);
    const auto s = concat_odd_even(g, rng.bernoulli(0.5));
    for (bool mf : {false, true})
      for (bool sw : {false, true}) {
        const oracle::Rules rules(s.odd, s.even, mf, sw);
        const auto a = align(s.odd, s.even,
                             {mf ? AlignObjective::MatchFirst : AlignObjective::Levenshtein, sw});
        ASSERT_EQ(a.cost, oracle::exhaustive_cost(s.odd, s.even, rules));
      }
  }
}

TEST(Align, PairsRespectAdjacencyAndMonotonicity) {
  Rng rng(13);
  for (int it = 0; it < 300; ++it) {
    const auto g = oracle::random_group(rng, 8, 6, 4);
    const auto s = concat_odd_even(g, true);
    const auto a = align(s.odd, s.even);
    std::size_t i = 0, j = 0;
    for (const auto& p : a.pairs) {
      if (p.odd && p.even) {
        EXPECT_EQ(std::abs(p.odd->segment - p.even->segment), 1);
      }
      if (p.odd) {
        EXPECT_EQ(*p.odd, s.odd[i++]);
      }
      if (p.even) {
        EXPECT_EQ(*p.even, s.even[j++]);
      }
    }
    EXPECT_EQ(i, s.odd.size());
    EXPECT_EQ(j, s.even.size());
  }
}

TEST(Align, MatchFirstKeepsEveryPossibleMatch) {
  // Among all alignments, MatchFirst has the largest number of exact matches.
  Rng rng(14);
  for (int it = 0; it < 200; ++it) {
    const auto g = oracle::random_group(rng, 6, 5, 3);
    const auto s = concat_odd_even(g, false);
    const auto mf = align(s.odd, s.even, {AlignObjective::MatchFirst, false});
    oracle::Rules unit(s.odd, s.even, false, false);
    // Maximum matches via a tiny LCS-style DP written here.
    const auto n = s.odd.size(), m = s.even.size();
    std::vector<std::vector<int>> best(n + 1, std::vector<int>(m + 1, 0));
    for (std::size_t a = 1; a <= n; ++a)
      for (std::size_t b = 1; b <= m; ++b) {
        best[a][b] = std::max(best[a - 1][b], best[a][b - 1]);
        if (unit.pair(s.odd[a - 1], s.even[b - 1]) == 0)
          best[a][b] = std::max(best[a][b], best[a - 1][b - 1] + 1);
      }
    int matches = 0;
    for (const auto& p : mf.pairs)
      if (p.odd && p.even && p.odd->token == p.even->token) ++matches;
    EXPECT_EQ(matches, best[n][m]);
  }
}

TEST(Confidence, FormulaValues) {
  EXPECT_EQ(confidence(5, 10), 0.0);
  EXPECT_EQ(confidence(1, 10), -0.4);
  EXPECT_EQ(confidence(10, 10), -0.5);
  EXPECT_THROW(confidence(0, 10), Error);
  EXPECT_THROW(confidence(11, 10), Error);
  EXPECT_THROW(confidence(1, 0), Error);
}

TEST(SelectWords, PicksHigherConfidence) {
  const auto v = abc();
  const auto cat = pt(v, "cat", 1, 5, 10), hat = pt(v, "hat", 2, 1, 10);
  EXPECT_EQ(render(v, select_words({{cat, hat}})), "cat");
  EXPECT_EQ(render(v, select_words({{hat, cat}})), "cat");
}

TEST(SelectWords, EmptySideLoses) {
  const auto v = abc();
  EXPECT_EQ(render(v, select_words({{std::nullopt, pt(v, "sat", 2)}})), "sat");
  EXPECT_EQ(render(v, select_words({{pt(v, "sat", 1), std::nullopt}})), "sat");
}

TEST(SelectWords, TieGoesToOdd) {
  const auto v = abc();
  EXPECT_EQ(render(v, select_words({{pt(v, "a", 1, 2, 4), pt(v, "b", 2, 2, 4)}})), "a");
  EXPECT_EQ(render(v, select_words({{pt(v, "a", 3, 1, 2), pt(v, "b", 2, 2, 2)}})), "a");
}

TEST(SelectWords, SeparatorsNeverEmitted) {
  const auto v = abc();
  ProvToken wc{Token(Special::Wc), 1, 0, 2};
  EXPECT_TRUE(select_words({{wc, std::nullopt}, {std::nullopt, wc}}).empty());
  EXPECT_EQ(render(v, select_words({{wc, pt(v, "x", 2)}})), "x");
}

TEST(OverlappingInference, SingleSegmentVerbatim) {
  const auto v = abc();
  EXPECT_EQ(render(v, overlapping_inference(group_of(v, {"a b a c"}))), "a b a c");
}

TEST(OverlappingInference, AllEmptyGroup) {
  const auto v = abc();
  EXPECT_TRUE(overlapping_inference(group_of(v, {"", "", ""})).empty());
}

TEST(OverlappingInference, RecoversSlicedReference) {
  // Slice a known sequence into 50%-overlapped windows by hand.
  const auto v = abc();
  const auto g = group_of(v, {"the cat sat a", "sat a b c", "b c d x", "d x"});
  EXPECT_EQ(render(v, overlapping_inference(g)), "the cat sat a b c d x");
}

TEST(OverlappingInference, NoiselessSimulationIsExact) {
  SimConfig sim;
  sim.vocab_size = 1000;
  const auto clean = ErrorConfig::noiseless();
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto conv = generate_conversation(sim, 100 + s);
    const auto r = recognize(conv, clean, sim.vocab_size, 16.0, 0.5, s);
    const auto refs = per_speaker_reference(conv);
    for (const auto& g : groups_of(conv, r)) EXPECT_EQ(overlapping_inference(g), refs.at(g.speaker));
  }
}
