#pragma once

#include <algorithm>
#include <cstdio>
#include <functional>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hstitch/conversation_sim.hpp"
#include "hstitch/error.hpp"
#include "hstitch/hypothesis.hpp"
#include "hstitch/nn/decode.hpp"
#include "hstitch/nn/train.hpp"
#include "hstitch/overlap_align.hpp"
#include "hstitch/rng.hpp"
#include "hstitch/sa_wer.hpp"
#include "hstitch/segmenter.hpp"
#include "hstitch/stitcher_encoding.hpp"

namespace hstitch {

enum class Method { None, Block, Overlap, StitchAlign, StitchWc, StitchWcoe };

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::None: return "none";
    case Method::Block: return "block";
    case Method::Overlap: return "overlap";
    case Method::StitchAlign: return "stitch_align";
    case Method::StitchWc: return "stitch_wc";
    case Method::StitchWcoe: return "stitch_wcoe";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  for (auto m : {Method::None, Method::Block, Method::Overlap, Method::StitchAlign,
                 Method::StitchWc, Method::StitchWcoe})
    if (method_name(m) == s) return m;
  throw Error(ErrorKind::InvalidArgument, "unknown method: " + std::string(s));
}

inline std::optional<Variant> stitcher_variant(Method m) {
  switch (m) {
    case Method::StitchAlign: return Variant::AlignPairs;
    case Method::StitchWc: return Variant::SerialWc;
    case Method::StitchWcoe: return Variant::SerialWcoe;
    default: return std::nullopt;
  }
}

enum class Split { Train, Dev, Test };

inline std::string_view split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "?";
}

// Knobs of the whole-recording baseline. Error probabilities are multiplied
// by 1 + growth * max(0, T - calibration) / calibration for a recording of
// T seconds, emulating a recognizer that degrades on inputs longer than it
// was trained on.
struct LongFormDegradation {
  double calibration_seconds = 16.0;
  double growth = 0.5;

  double multiplier(double duration) const {
    return 1.0 + growth * std::max(0.0, duration - calibration_seconds) / calibration_seconds;
  }
};

// Stitcher settings for the synthetic experiments. No dropout: word
// relabelling already keeps the small model from memorising the corpus.
inline nn::StitcherConfig experiment_stitcher() {
  nn::StitcherConfig c;
  c.dropout = 0.0;
  c.lr = 0.002;
  return c;
}

struct ExperimentSpec {
  SimConfig sim;
  ErrorConfig error;
  double window_len = 16.0;
  double train_overlap_ratio = 0.5;  // stitchers are trained on this ratio only
  std::vector<double> overlap_ratios{0.0, 0.5};
  std::vector<Method> methods{Method::None, Method::Block, Method::Overlap, Method::StitchAlign,
                              Method::StitchWc, Method::StitchWcoe};
  std::int32_t train_count = 2000;
  std::int32_t dev_count = 100;
  std::int32_t test_count = 200;
  nn::StitcherConfig stitcher = experiment_stitcher();
  std::int32_t max_epochs = 60;
  std::int32_t batch_size = 8;
  std::int32_t patience = 5;
  bool relabel_words = true;  // simulated words are interchangeable
  bool linear_decay = true;
  std::int32_t beam = 4;
  LongFormDegradation long_form;
  std::vector<std::uint64_t> seeds{1};

  void validate() const {
    sim.validate();
    error.validate();
    require(window_len > 0.0, "window_len must be positive");
    require(!methods.empty(), "methods must be nonempty");
    require(!overlap_ratios.empty(), "overlap_ratios must be nonempty");
    for (double r : overlap_ratios)
      require(r >= 0.0 && r <= kMaxOverlapRatio, "overlap ratio outside [0, 0.75]");
    require(train_overlap_ratio >= 0.0 && train_overlap_ratio <= kMaxOverlapRatio,
            "train overlap ratio outside [0, 0.75]");
    require(train_count >= 1 && dev_count >= 1 && test_count >= 1, "corpus sizes must be >= 1");
    require(!seeds.empty(), "seeds must be nonempty");
    require(beam >= 1, "beam must be >= 1");
    require(long_form.calibration_seconds > 0.0 && long_form.growth >= 0.0,
            "bad long-form degradation knobs");
  }
};

// Seed of conversation i of a split.
inline std::uint64_t conversation_seed(std::uint64_t master, Split split, std::int32_t i) {
  return derive_seed(master, stream_id("conversation/" + std::string(split_name(split))),
                     static_cast<std::uint64_t>(i));
}

// Seed of the recognizer channel for conversation i of a split.
inline std::uint64_t channel_seed(std::uint64_t master, Split split, std::int32_t i) {
  return derive_seed(master, stream_id("channel/" + std::string(split_name(split))),
                     static_cast<std::uint64_t>(i));
}

inline std::vector<Conversation> simulate_split(const SimConfig& sim, std::uint64_t master,
                                                Split split, std::int32_t count) {
  std::vector<Conversation> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::int32_t i = 0; i < count; ++i)
    out.push_back(generate_conversation(sim, conversation_seed(master, split, i)));
  return out;
}

// One recording pushed through the windowed recognizer stand-in.
struct RecordingHyps {
  WindowPlan plan;
  std::vector<SegmentHypothesis> hyps;
};

inline RecordingHyps recognize(const Conversation& conv, const ErrorConfig& error,
                               std::int32_t vocab_size, double window_len, double ratio,
                               std::uint64_t seed) {
  RecordingHyps r;
  r.plan = make_windows(conv.duration(), window_len, ratio);
  ErrorConfig e = error;
  e.seed = seed;
  r.hyps = apply_error_channel(conv, r.plan.windows, e, vocab_size);
  return r;
}

inline RecordingHyps recognize_whole(const Conversation& conv, const ErrorConfig& error,
                                     std::int32_t vocab_size, const LongFormDegradation& lf,
                                     std::uint64_t seed) {
  RecordingHyps r;
  r.plan = whole_recording_plan(conv.duration());
  ErrorConfig e = scaled(error, lf.multiplier(conv.duration()));
  e.seed = seed;
  r.hyps = apply_error_channel(conv, r.plan.windows, e, vocab_size);
  return r;
}

inline std::vector<HypothesisGroup> groups_of(const Conversation& conv, const RecordingHyps& r) {
  return group_by_speaker(r.hyps, conv.num_speakers, static_cast<std::int32_t>(r.plan.size()));
}

inline TokenSeq block_concatenation(const HypothesisGroup& g) {
  TokenSeq out;
  for (const auto& seg : g.segments) out.insert(out.end(), seg.begin(), seg.end());
  return out;
}

// Training pairs of one recording: one per speaker present in the reference
// or in the hypotheses. Speakers whose group is empty contribute nothing.
inline std::vector<nn::TrainExample> stitcher_examples(const Conversation& conv,
                                                       const RecordingHyps& r, Variant v) {
  const auto refs = per_speaker_reference(conv);
  std::vector<nn::TrainExample> out;
  for (const auto& g : groups_of(conv, r)) {
    bool any = false;
    for (const auto& s : g.segments) any = any || !s.empty();
    if (!any) continue;
    nn::TrainExample ex;
    ex.input = encode(g, v);
    ex.target = refs.at(g.speaker);
    out.push_back(std::move(ex));
  }
  return out;
}

template <typename T>
SpeakerTranscripts run_method(Method method, const Conversation& conv, const RecordingHyps& r,
                              const nn::StitcherModel<T>* model, std::int32_t beam = 1) {
  const auto variant = stitcher_variant(method);
  if (variant && model == nullptr)
    throw Error(ErrorKind::MissingModel,
                "method " + std::string(method_name(method)) + " needs a trained model");
  SpeakerTranscripts out;
  for (const auto& g : groups_of(conv, r)) {
    bool any = false;
    for (const auto& s : g.segments) any = any || !s.empty();
    TokenSeq words;
    if (!any) {
      // nothing recognized for this speaker
    } else if (variant) {
      words = beam == 1 ? nn::greedy_decode(*model, encode(g, *variant))
                        : nn::beam_decode(*model, encode(g, *variant), beam);
    } else if (method == Method::Overlap) {
      words = overlapping_inference(g);
    } else {
      words = block_concatenation(g);
    }
    out[g.speaker] = std::move(words);
  }
  return out;
}

// One cell of the results grid. Error rates are micro-averaged within a
// seed and then averaged over seeds; costs are per test split, averaged over
// seeds. decode_cost is sum_T T / (window_len * (1 - r)): the number of
// stride-spaced windows a stream of length T needs. windows_decoded counts the
// windows the segmenter actually produced.
struct MethodResult {
  Method method = Method::Block;
  std::optional<double> overlap_ratio;  // empty for whole-recording decoding
  double dev_sa_wer = 0.0;
  double test_sa_wer = 0.0;
  std::vector<double> dev_by_seed;
  std::vector<double> test_by_seed;
  double decode_cost = 0.0;
  double windows_decoded = 0.0;
};

struct TrainingSummary {
  std::uint64_t seed = 0;
  Variant variant = Variant::SerialWc;
  std::int32_t train_examples = 0;
  std::int32_t epochs = 0;
  std::int32_t best_epoch = 0;
  double best_dev_loss = 0.0;
};

struct ExperimentResult {
  std::vector<MethodResult> rows;
  std::vector<TrainingSummary> training;
};

// Cells of the grid in output order. Baselines sit at their natural ratio
// (block 0, overlap and the alignment stitcher at the training ratio); the
// serialized stitchers are evaluated at every requested ratio.
inline std::vector<std::pair<Method, std::optional<double>>> experiment_cells(
    const ExperimentSpec& spec) {
  std::vector<std::pair<Method, std::optional<double>>> cells;
  for (auto m : spec.methods) {
    switch (m) {
      case Method::None: cells.push_back({m, std::nullopt}); break;
      case Method::Block: cells.push_back({m, 0.0}); break;
      case Method::Overlap:
      case Method::StitchAlign: cells.push_back({m, spec.train_overlap_ratio}); break;
      case Method::StitchWc:
      case Method::StitchWcoe:
        for (double r : spec.overlap_ratios) cells.push_back({m, r});
        break;
    }
  }
  return cells;
}

// Training pairs of a whole split, recognized at the given ratio.
inline std::vector<nn::TrainExample> split_examples(const std::vector<Conversation>& convs,
                                                    const ExperimentSpec& spec,
                                                    std::uint64_t seed, Split split, Variant v,
                                                    double ratio) {
  std::vector<nn::TrainExample> out;
  for (std::size_t i = 0; i < convs.size(); ++i) {
    const auto r = recognize(convs[i], spec.error, spec.sim.vocab_size, spec.window_len, ratio,
                             channel_seed(seed, split, static_cast<std::int32_t>(i)));
    auto ex = stitcher_examples(convs[i], r, v);
    out.insert(out.end(), std::make_move_iterator(ex.begin()), std::make_move_iterator(ex.end()));
  }
  return out;
}

inline nn::StitcherConfig stitcher_config_for(const ExperimentSpec& spec, Variant v) {
  auto cfg = spec.stitcher;
  cfg.variant = v;
  cfg.vocab_size = spec.sim.vocab_size + kNumReserved;
  return cfg;
}

inline nn::TrainResult<float> train_stitcher(const ExperimentSpec& spec, Variant v,
                                             std::uint64_t seed,
                                             const std::vector<nn::TrainExample>& train_set,
                                             const std::vector<nn::TrainExample>& dev_set,
                                             std::function<void(const nn::EpochReport&)> on_epoch = {}) {
  const auto tag = std::string(variant_name(v));
  auto model = nn::init_model<float>(stitcher_config_for(spec, v),
                                     derive_seed(seed, stream_id("init/" + tag)));
  nn::TrainOptions opt;
  opt.max_epochs = spec.max_epochs;
  opt.batch_size = spec.batch_size;
  opt.patience = spec.patience;
  opt.relabel_words = spec.relabel_words;
  opt.linear_decay = spec.linear_decay;
  opt.seed = derive_seed(seed, stream_id("train/" + tag));
  opt.on_epoch = std::move(on_epoch);
  return nn::train(std::move(model), train_set, dev_set, opt);
}

struct ProgressSink {
  std::function<void(const std::string&)> log;
  void operator()(const std::string& s) const {
    if (log) log(s);
  }
};

template <typename T>
ErrorCounts evaluate_method(Method method, std::optional<double> ratio,
                            const std::vector<Conversation>& convs, const ExperimentSpec& spec,
                            std::uint64_t seed, Split split, const nn::StitcherModel<T>* model,
                            double* decode_cost, double* windows) {
  ErrorCounts c;
  for (std::size_t i = 0; i < convs.size(); ++i) {
    const auto cs = channel_seed(seed, split, static_cast<std::int32_t>(i));
    const auto r = ratio ? recognize(convs[i], spec.error, spec.sim.vocab_size, spec.window_len,
                                     *ratio, cs)
                         : recognize_whole(convs[i], spec.error, spec.sim.vocab_size,
                                           spec.long_form, cs);
    c += sa_error_counts(run_method(method, convs[i], r, model, spec.beam),
                         per_speaker_reference(convs[i]));
    const double dur = convs[i].duration();
    if (decode_cost) *decode_cost += ratio ? dur / r.plan.stride() : 1.0;
    if (windows) *windows += static_cast<double>(r.plan.size());
  }
  return c;
}

inline ExperimentResult run_experiment(const ExperimentSpec& spec, const ProgressSink& progress = {}) {
  spec.validate();
  const auto cells = experiment_cells(spec);
  ExperimentResult res;
  res.rows.resize(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    res.rows[c].method = cells[c].first;
    res.rows[c].overlap_ratio = cells[c].second;
  }
  const double nseeds = static_cast<double>(spec.seeds.size());

  for (auto seed : spec.seeds) {
    const auto dev = simulate_split(spec.sim, seed, Split::Dev, spec.dev_count);
    const auto test = simulate_split(spec.sim, seed, Split::Test, spec.test_count);
    std::map<Variant, nn::StitcherModel<float>> models;
    for (auto m : spec.methods) {
      const auto v = stitcher_variant(m);
      if (!v || models.count(*v)) continue;
      const auto train_convs = simulate_split(spec.sim, seed, Split::Train, spec.train_count);
      const auto tr = split_examples(train_convs, spec, seed, Split::Train, *v, spec.train_overlap_ratio);
      const auto dv = split_examples(dev, spec, seed, Split::Dev, *v, spec.train_overlap_ratio);
      progress("seed " + std::to_string(seed) + ": training " + std::string(variant_name(*v)) +
               " on " + std::to_string(tr.size()) + " examples");
      auto tr_res = train_stitcher(spec, *v, seed, tr, dv, [&](const nn::EpochReport& r) {
        progress("  epoch " + std::to_string(r.epoch) + " train " + std::to_string(r.train_loss) +
                 " dev " + std::to_string(r.dev_loss) + " acc " + std::to_string(r.dev_accuracy) +
                 (r.improved ? " *" : ""));
      });
      res.training.push_back({seed, *v, static_cast<std::int32_t>(tr.size()),
                              static_cast<std::int32_t>(tr_res.history.size()), tr_res.best_epoch,
                              tr_res.best_dev_loss});
      models.emplace(*v, std::move(tr_res.model));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      auto& row = res.rows[c];
      const auto v = stitcher_variant(row.method);
      const nn::StitcherModel<float>* model = v ? &models.at(*v) : nullptr;
      const auto d = evaluate_method(row.method, row.overlap_ratio, dev, spec, seed, Split::Dev,
                                     model, nullptr, nullptr);
      double cost = 0.0, windows = 0.0;
      const auto t = evaluate_method(row.method, row.overlap_ratio, test, spec, seed, Split::Test,
                                     model, &cost, &windows);
      row.dev_by_seed.push_back(sa_wer_percent(d));
      row.test_by_seed.push_back(sa_wer_percent(t));
      row.dev_sa_wer += row.dev_by_seed.back() / nseeds;
      row.test_sa_wer += row.test_by_seed.back() / nseeds;
      row.decode_cost += cost / nseeds;
      row.windows_decoded += windows / nseeds;
      progress("seed " + std::to_string(seed) + ": " + std::string(method_name(row.method)) +
               " dev " + std::to_string(row.dev_by_seed.back()) + " test " +
               std::to_string(row.test_by_seed.back()));
    }
  }
  return res;
}

inline std::string render_table(const ExperimentResult& res) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-14s %8s %8s %8s %12s %10s\n", "method", "overlap", "dev",
                "test", "decode_cost", "windows");
  out += buf;
  for (const auto& r : res.rows) {
    char ov[16];
    if (r.overlap_ratio)
      std::snprintf(ov, sizeof ov, "%.0f%%", 100.0 * *r.overlap_ratio);
    else
      std::snprintf(ov, sizeof ov, "-");
    std::snprintf(buf, sizeof buf, "%-14s %8s %8.2f %8.2f %12.1f %10.1f\n",
                  std::string(method_name(r.method)).c_str(), ov, r.dev_sa_wer, r.test_sa_wer,
                  r.decode_cost, r.windows_decoded);
    out += buf;
  }
  return out;
}

}  // namespace hstitch
