#include <gtest/gtest.h>

#include "hstitch/json_io.hpp"
#include "hstitch/pipeline.hpp"

using namespace hstitch;

namespace {

ExperimentSpec tiny_spec() {
  ExperimentSpec s;
  s.sim.vocab_size = 30;
  s.sim.num_speakers_max = 3;
  s.sim.utterances_max = 4;
  s.train_count = 12;
  s.dev_count = 3;
  s.test_count = 4;
  s.stitcher.enc_layers = s.stitcher.dec_layers = 1;
  s.stitcher.model_dim = 8;
  s.stitcher.heads = 2;
  s.stitcher.ff_dim = 8;
  s.max_epochs = 2;
  s.batch_size = 4;
  s.seeds = {3, 4};
  return s;
}

}  // namespace

TEST(JsonIo, ConversationRoundTrip) {
  SimConfig sim;
  const auto v = simulation_vocabulary(sim.vocab_size);
  for (const auto& c : simulate_split(sim, 5, Split::Train, 10)) {
    const auto j = io::conversation_to_json(c, v, 0);
    EXPECT_EQ(io::conversation_from_json(nlohmann::json::parse(j.dump()), v), c);
  }
}

TEST(JsonIo, RecordingsRoundTrip) {
  SimConfig sim;
  ErrorConfig err;
  const auto v = simulation_vocabulary(sim.vocab_size);
  const auto convs = simulate_split(sim, 6, Split::Test, 8);
  std::vector<RecordingHyps> recs;
  for (std::int32_t i = 0; i < 8; ++i)
    recs.push_back(recognize(convs[static_cast<std::size_t>(i)], err, sim.vocab_size, 16.0, 0.5,
                             channel_seed(6, Split::Test, i)));
  std::string windows;
  const auto hyps = io::recordings_to_jsonl(recs, v, &windows);
  const auto back = io::recordings_from_jsonl(windows, hyps, v);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].plan.windows, recs[i].plan.windows);
    EXPECT_EQ(back[i].hyps, recs[i].hyps);
  }
}

TEST(JsonIo, UnknownRecordingIsFormatError) {
  const auto v = build_vocabulary({"a"});
  const std::string windows = R"({"recording":0,"window_len":16,"overlap_ratio":0,"windows":[[0,16]]})" "\n";
  const std::string hyps = R"({"recording":4,"window":1,"speaker":0,"tokens":["a"]})" "\n";
  try {
    io::recordings_from_jsonl(windows, hyps, v);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Format);
  }
}

TEST(JsonIo, MalformedLinesAreFormatErrors) {
  const auto v = build_vocabulary({"a"});
  EXPECT_THROW(io::recordings_from_jsonl("{not json\n", "", v), Error);
  EXPECT_THROW(io::conversation_from_json(nlohmann::json::parse(R"({"utterances":[]})"), v), Error);
}

TEST(JsonIo, CorpusLineRoundTrip) {
  SimConfig sim;
  ErrorConfig err;
  const auto v = simulation_vocabulary(sim.vocab_size);
  const auto conv = simulate_split(sim, 7, Split::Train, 1).front();
  const auto r = recognize(conv, err, sim.vocab_size, 16.0, 0.5, channel_seed(7, Split::Train, 0));
  for (auto variant : {Variant::AlignPairs, Variant::SerialWc, Variant::SerialWcoe}) {
    for (const auto& ex : stitcher_examples(conv, r, variant)) {
      const auto j = io::corpus_line_to_json({0, 1, ex}, v);
      const auto back = io::corpus_line_from_json(nlohmann::json::parse(j.dump()), v);
      EXPECT_EQ(back.example.target, ex.target);
      EXPECT_EQ(back.example.input.variant, variant);
      EXPECT_EQ(back.example.input.tokens, ex.input.tokens);
      ASSERT_EQ(back.example.input.pairs.size(), ex.input.pairs.size());
      for (std::size_t k = 0; k < ex.input.pairs.size(); ++k) {
        const auto& a = ex.input.pairs[k];
        const auto& b = back.example.input.pairs[k];
        EXPECT_EQ(a.odd.has_value(), b.odd.has_value());
        EXPECT_EQ(a.even.has_value(), b.even.has_value());
        if (a.odd && b.odd) {
          EXPECT_EQ(a.odd->token, b.odd->token);
        }
        if (a.even && b.even) {
          EXPECT_EQ(a.even->token, b.even->token);
        }
      }
    }
  }
}

TEST(JsonIo, TranscriptsRoundTrip) {
  const auto v = build_vocabulary({"a", "b"});
  SpeakerTranscripts t{{0, tokenize(v, "a b")}, {2, {}}};
  EXPECT_EQ(io::transcripts_from_json(io::transcripts_to_json(t, v), v), t);
  EXPECT_THROW(io::transcripts_from_json(nlohmann::json::parse(R"({"x1":"a"})"), v), Error);
}

TEST(JsonIo, VocabText) {
  const auto v = simulation_vocabulary(50);
  EXPECT_EQ(io::vocab_from_text(io::vocab_to_text(v)), v);
}

TEST(Methods, NamesRoundTrip) {
  for (auto m : {Method::None, Method::Block, Method::Overlap, Method::StitchAlign,
                 Method::StitchWc, Method::StitchWcoe})
    EXPECT_EQ(parse_method(method_name(m)), m);
  EXPECT_THROW(parse_method("bogus"), Error);
}

TEST(Methods, StitcherNeedsModel) {
  SimConfig sim;
  const auto conv = simulate_split(sim, 1, Split::Test, 1).front();
  const auto r = recognize(conv, ErrorConfig{}, sim.vocab_size, 16.0, 0.5, 1);
  try {
    run_method<float>(Method::StitchWc, conv, r, nullptr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingModel);
  }
}

TEST(Methods, SpeakersStayInRange) {
  SimConfig sim;
  ErrorConfig err;
  err.p_speaker_confusion = 0.2;
  const auto convs = simulate_split(sim, 2, Split::Test, 20);
  for (std::int32_t i = 0; i < 20; ++i) {
    const auto& c = convs[static_cast<std::size_t>(i)];
    const auto r = recognize(c, err, sim.vocab_size, 16.0, 0.5, channel_seed(2, Split::Test, i));
    for (auto m : {Method::Block, Method::Overlap})
      for (const auto& [k, words] : run_method<float>(m, c, r, nullptr)) {
        EXPECT_GE(k, 0);
        EXPECT_LT(k, c.num_speakers);
      }
  }
}

TEST(Methods, BlockIsPlainConcatenation) {
  const auto v = build_vocabulary({"a", "b", "c"});
  HypothesisGroup g{0, {tokenize(v, "a b"), {}, tokenize(v, "b c")}};
  EXPECT_EQ(render(v, block_concatenation(g)), "a b b c");
}

TEST(Experiment, Cells) {
  ExperimentSpec s;
  s.overlap_ratios = {0.0, 0.25, 0.5};
  s.train_overlap_ratio = 0.5;
  const auto cells = experiment_cells(s);
  ASSERT_EQ(cells.size(), 10u);
  EXPECT_EQ(cells[0].first, Method::None);
  EXPECT_FALSE(cells[0].second);
  EXPECT_EQ(*cells[1].second, 0.0);
  EXPECT_EQ(*cells[2].second, 0.5);
  EXPECT_EQ(*cells[3].second, 0.5);
  EXPECT_EQ(cells[4].first, Method::StitchWc);
  EXPECT_EQ(*cells[5].second, 0.25);
  EXPECT_EQ(cells[9].first, Method::StitchWcoe);
}

TEST(Experiment, DecodeCostDoublesAtHalfOverlap) {
  auto s = tiny_spec();
  s.methods = {Method::Block, Method::Overlap};
  s.train_overlap_ratio = 0.5;
  s.test_count = 30;
  s.seeds = {1};
  const auto res = run_experiment(s);
  ASSERT_EQ(res.rows.size(), 2u);
  EXPECT_NEAR(res.rows[1].decode_cost / res.rows[0].decode_cost, 2.0, 1e-9);
  EXPECT_GE(res.rows[1].windows_decoded, res.rows[0].windows_decoded);
}

TEST(Experiment, DeterministicAcrossRuns) {
  const auto s = tiny_spec();
  const auto a = run_experiment(s), b = run_experiment(s);
  EXPECT_EQ(render_table(a), render_table(b));
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].test_by_seed, b.rows[i].test_by_seed);
    EXPECT_EQ(a.rows[i].dev_by_seed, b.rows[i].dev_by_seed);
  }
  ASSERT_EQ(a.training.size(), 6u);  // three stitchers, two seeds
  for (const auto& t : a.training) EXPECT_GE(t.best_epoch, 1);
}

TEST(Experiment, RejectsBadSpec) {
  auto s = tiny_spec();
  s.overlap_ratios = {0.9};
  EXPECT_THROW(run_experiment(s), Error);
  s = tiny_spec();
  s.seeds.clear();
  EXPECT_THROW(run_experiment(s), Error);
}
