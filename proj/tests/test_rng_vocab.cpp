#include <gtest/gtest.h>

#include <set>

#include "hstitch/rng.hpp"
#include "hstitch/vocabulary.hpp"

using namespace hstitch;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(Rng, UniformIntStaysInRange) {
  Rng r(1);
  std::set<std::int64_t> seen;
  for (int i = 0; i < 5000; ++i) {
    const auto x = r.uniform_int(-2, 3);
    ASSERT_GE(x, -2);
    ASSERT_LE(x, 3);
    seen.insert(x);
  }
  EXPECT_EQ(seen.size(), 6u);
}

TEST(Rng, UniformInUnitInterval) {
  Rng r(2);
  double sum = 0;
  for (int i = 0; i < 20000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 20000, 0.5, 0.01);
}

TEST(DeriveSeed, StreamsAndIndicesDiffer) {
  std::set<std::uint64_t> s;
  for (const char* name : {"conversation/train", "conversation/dev", "channel/train"})
    for (std::uint64_t i = 0; i < 100; ++i) s.insert(derive_seed(7, stream_id(name), i));
  EXPECT_EQ(s.size(), 300u);
  EXPECT_EQ(derive_seed(7, stream_id("x"), 3), derive_seed(7, stream_id("x"), 3));
  EXPECT_NE(derive_seed(7, stream_id("x"), 3), derive_seed(8, stream_id("x"), 3));
}

TEST(Vocabulary, Dedup) {
  const auto v = build_vocabulary({"a", "b", "a"});
  EXPECT_EQ(v.num_words(), 2);
  EXPECT_EQ(v.size(), 2 + kNumReserved);
}

TEST(Vocabulary, EmptyIsAnError) { EXPECT_THROW(build_vocabulary({}), Error); }

TEST(Vocabulary, RoundTrip) {
  const auto v = build_vocabulary({"cat", "sat"});
  EXPECT_EQ(v.render(v.lookup("sat")), "sat");
  EXPECT_TRUE(v.lookup("cat").is_word());
  EXPECT_THROW(v.lookup("dog"), Error);
}

TEST(Vocabulary, ReservedBlock) {
  const auto v = build_vocabulary({"w"});
  EXPECT_EQ(v.lookup("<WC>"), Token(Special::Wc));
  EXPECT_EQ(v.lookup("</s>"), Token(Special::Eos));
  EXPECT_TRUE(Token(Special::Wco).is_separator());
  EXPECT_FALSE(Token(Special::Eos).is_separator());
  EXPECT_FALSE(Token(Special::Bos).is_word());
  EXPECT_THROW(build_vocabulary({"<WC>"}), Error);
}

TEST(Vocabulary, TokenizeRender) {
  const auto v = build_vocabulary({"a", "b"});
  const auto seq = tokenize(v, "  a <WCO>\tb ");
  ASSERT_EQ(seq.size(), 3u);
  EXPECT_EQ(render(v, seq), "a <WCO> b");
  EXPECT_TRUE(tokenize(v, "").empty());
}
