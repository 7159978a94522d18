// hstitch: command-line front end for the simulation / stitching pipeline.
//
//   hstitch simulate      --out DIR   conversations.jsonl, vocab.txt
//   hstitch segment       --out DIR   windows.jsonl, hyps.jsonl
//   hstitch build-corpus  --out DIR   corpus/<variant>.{train,dev}.jsonl
//   hstitch train         --out DIR   models/<variant>.ckpt, reports/train_<variant>.json
//   hstitch stitch        --out DIR   stitched_<method>.jsonl
//   hstitch eval          --out DIR   reports/eval_<method>.json
//   hstitch experiment    --out DIR   reports/experiment.{json,txt}
//
// Every option can also come from a key = value file given by --config;
// command-line values win.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hstitch/conversation_sim.hpp"
#include "hstitch/error.hpp"
#include "hstitch/json_io.hpp"
#include "hstitch/nn/checkpoint.hpp"
#include "hstitch/pipeline.hpp"
#include "hstitch/sa_wer.hpp"

namespace fs = std::filesystem;
using namespace hstitch;
using nlohmann::json;

namespace {

struct Options {
  std::string out = ".";
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds;
  std::string split = "test";
  std::int32_t count = 10;
  double overlap = 0.5;
  std::vector<double> overlaps{0.0, 0.5};
  std::vector<std::string> variants{"align_pairs", "serial_wc", "serial_wcoe"};
  std::string variant = "serial_wcoe";
  std::string method = "overlap";
  std::vector<std::string> methods{"none", "block", "overlap", "stitch_align", "stitch_wc",
                                   "stitch_wcoe"};
  std::string model;
  ExperimentSpec spec;
};

Split parse_split(const std::string& s) {
  for (auto sp : {Split::Train, Split::Dev, Split::Test})
    if (split_name(sp) == s) return sp;
  throw Error(ErrorKind::InvalidArgument, "unknown split: " + s);
}

std::string path(const Options& o, const std::string& rel) { return (fs::path(o.out) / rel).string(); }

void ensure_dir(const std::string& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create directory " + p + ": " + ec.message());
}

Vocabulary load_vocab(const Options& o) { return io::vocab_from_text(io::read_file(path(o, "vocab.txt"))); }

std::vector<Conversation> load_conversations(const Options& o, const Vocabulary& v) {
  std::vector<Conversation> out;
  for (const auto& j : io::parse_jsonl(io::read_file(path(o, "conversations.jsonl")),
                                       "conversations.jsonl"))
    out.push_back(io::conversation_from_json(j, v));
  return out;
}

void add_sim_options(CLI::App* app, SimConfig& s) {
  app->add_option("--speakers-max", s.num_speakers_max, "Maximum speakers per conversation");
  app->add_option("--utterances-max", s.utterances_max, "Maximum utterances per conversation");
  app->add_option("--target-overlap", s.target_overlap_ratio, "Target speech overlap ratio");
  app->add_option("--word-duration", s.word_duration_mean, "Mean word duration (s)");
  app->add_option("--word-jitter", s.word_duration_jitter, "Uniform word duration jitter (s)");
  app->add_option("--utt-words-min", s.utterance_words_min, "Minimum words per utterance");
  app->add_option("--utt-words-max", s.utterance_words_max, "Maximum words per utterance");
  app->add_option("--pause-min", s.pause_min, "Minimum pause between utterances (s)");
  app->add_option("--pause-max", s.pause_max, "Maximum pause between utterances (s)");
  app->add_option("--vocab-size", s.vocab_size, "Number of simulated words");
}

void add_error_options(CLI::App* app, ErrorConfig& e) {
  app->add_option("--p-sub", e.p_sub, "Substitution probability");
  app->add_option("--p-del", e.p_del, "Deletion probability");
  app->add_option("--p-ins", e.p_ins, "Insertion probability");
  app->add_option("--edge-boost", e.edge_boost, "Error multiplier near window edges");
  app->add_option("--edge-zone", e.edge_zone, "Width of the edge zone (s)");
  app->add_option("--p-confusion", e.p_speaker_confusion, "Speaker confusion probability");
}

void add_stitcher_options(CLI::App* app, ExperimentSpec& s) {
  auto& c = s.stitcher;
  app->add_option("--enc-layers", c.enc_layers, "Encoder layers");
  app->add_option("--dec-layers", c.dec_layers, "Decoder layers");
  app->add_option("--model-dim", c.model_dim, "Model dimension");
  app->add_option("--heads", c.heads, "Attention heads");
  app->add_option("--ff-dim", c.ff_dim, "Feed-forward dimension");
  app->add_option("--dropout", c.dropout, "Dropout rate");
  app->add_option("--label-smoothing", c.label_smoothing, "Label smoothing");
  app->add_option("--lr", c.lr, "Adam learning rate");
  app->add_option("--warmup-steps", c.warmup_steps, "Linear warmup updates (0: constant lr)");
  app->add_option("--epochs", s.max_epochs, "Maximum training epochs");
  app->add_option("--batch", s.batch_size, "Examples per update");
  app->add_option("--patience", s.patience, "Early-stopping patience (epochs)");
  app->add_flag("--relabel,!--no-relabel", s.relabel_words,
                "Randomly permute word ids per training example");
  app->add_flag("--linear-decay,!--no-linear-decay", s.linear_decay,
                "Decay the learning rate linearly to zero over --epochs");
}

void add_common(CLI::App* app, Options& o) {
  app->add_option("--out", o.out, "Artifact directory")->required();
  app->add_option("--seed", o.seed, "Master seed");
}

void log(const std::string& s) { std::cerr << s << "\n"; }

// ---- stages ---------------------------------------------------------------

void cmd_simulate(Options& o) {
  ensure_dir(o.out);
  const auto vocab = simulation_vocabulary(o.spec.sim.vocab_size);
  const auto convs = simulate_split(o.spec.sim, o.seed, parse_split(o.split), o.count);
  std::string text;
  for (std::size_t i = 0; i < convs.size(); ++i)
    text += io::conversation_to_json(convs[i], vocab, static_cast<std::int32_t>(i)).dump() + "\n";
  io::write_file(path(o, "conversations.jsonl"), text);
  io::write_file(path(o, "vocab.txt"), io::vocab_to_text(vocab));
  log("wrote " + std::to_string(convs.size()) + " conversations");
}

void cmd_segment(Options& o) {
  const auto vocab = load_vocab(o);
  const auto convs = load_conversations(o, vocab);
  const auto split = parse_split(o.split);
  std::vector<RecordingHyps> recs;
  for (std::size_t i = 0; i < convs.size(); ++i)
    recs.push_back(recognize(convs[i], o.spec.error, vocab.num_words(), o.spec.window_len,
                             o.overlap, channel_seed(o.seed, split, static_cast<std::int32_t>(i))));
  std::string windows;
  const auto hyps = io::recordings_to_jsonl(recs, vocab, &windows);
  io::write_file(path(o, "windows.jsonl"), windows);
  io::write_file(path(o, "hyps.jsonl"), hyps);
  log("segmented " + std::to_string(recs.size()) + " recordings");
}

void cmd_build_corpus(Options& o) {
  ensure_dir(path(o, "corpus"));
  const auto vocab = simulation_vocabulary(o.spec.sim.vocab_size);
  io::write_file(path(o, "vocab.txt"), io::vocab_to_text(vocab));
  for (auto split : {Split::Train, Split::Dev}) {
    const auto n = split == Split::Train ? o.spec.train_count : o.spec.dev_count;
    const auto convs = simulate_split(o.spec.sim, o.seed, split, n);
    std::vector<RecordingHyps> recs;
    for (std::int32_t i = 0; i < n; ++i)
      recs.push_back(recognize(convs[static_cast<std::size_t>(i)], o.spec.error,
                               vocab.num_words(), o.spec.window_len, o.overlap,
                               channel_seed(o.seed, split, i)));
    for (const auto& vname : o.variants) {
      const auto v = parse_variant(vname);
      std::string text;
      std::size_t lines = 0;
      for (std::int32_t i = 0; i < n; ++i) {
        const auto& conv = convs[static_cast<std::size_t>(i)];
        const auto refs = per_speaker_reference(conv);
        for (const auto& g : groups_of(conv, recs[static_cast<std::size_t>(i)])) {
          bool any = false;
          for (const auto& s : g.segments) any = any || !s.empty();
          if (!any) continue;
          io::CorpusLine line{i, g.speaker, {encode(g, v), refs.at(g.speaker)}};
          text += io::corpus_line_to_json(line, vocab).dump() + "\n";
          ++lines;
        }
      }
      io::write_file(path(o, "corpus/" + vname + "." + std::string(split_name(split)) + ".jsonl"),
                     text);
      log(vname + " " + std::string(split_name(split)) + ": " + std::to_string(lines) + " examples");
    }
  }
}

std::vector<nn::TrainExample> load_corpus(const Options& o, const Vocabulary& v,
                                          const std::string& variant, Split split) {
  std::vector<nn::TrainExample> out;
  const auto file = path(o, "corpus/" + variant + "." + std::string(split_name(split)) + ".jsonl");
  for (const auto& j : io::parse_jsonl(io::read_file(file), file)) {
    auto line = io::corpus_line_from_json(j, v);
    if (variant_name(line.example.input.variant) != variant)
      throw Error(ErrorKind::Format, file + ": variant mismatch");
    out.push_back(std::move(line.example));
  }
  return out;
}

void cmd_train(Options& o) {
  const auto vocab = load_vocab(o);
  const auto v = parse_variant(o.variant);
  const auto tr = load_corpus(o, vocab, o.variant, Split::Train);
  const auto dv = load_corpus(o, vocab, o.variant, Split::Dev);
  o.spec.sim.vocab_size = vocab.num_words();
  json history = json::array();
  auto res = train_stitcher(o.spec, v, o.seed, tr, dv, [&](const nn::EpochReport& r) {
    history.push_back({{"epoch", r.epoch},
                       {"train_loss", r.train_loss},
                       {"dev_loss", r.dev_loss},
                       {"dev_accuracy", r.dev_accuracy},
                       {"improved", r.improved}});
    char buf[160];
    std::snprintf(buf, sizeof buf, "epoch %d train %.4f dev %.4f acc %.4f%s (%.1fs)", r.epoch,
                  r.train_loss, r.dev_loss, r.dev_accuracy, r.improved ? " *" : "", r.seconds);
    log(buf);
  });
  ensure_dir(path(o, "models"));
  ensure_dir(path(o, "reports"));
  nn::save_checkpoint(path(o, "models/" + o.variant + ".ckpt"), res.model, vocab);
  const json report = {{"variant", o.variant},
                       {"config", nn::config_to_json(res.model.config)},
                       {"train_examples", tr.size()},
                       {"dev_examples", dv.size()},
                       {"best_epoch", res.best_epoch},
                       {"best_dev_loss", res.best_dev_loss},
                       {"stopped_early", res.stopped_early},
                       {"history", history}};
  io::write_file(path(o, "reports/train_" + o.variant + ".json"), report.dump(2) + "\n");
}

void cmd_stitch(Options& o) {
  const auto method = parse_method(o.method);
  const auto vocab = load_vocab(o);
  std::optional<nn::LoadedCheckpoint<float>> ckpt;
  if (const auto v = stitcher_variant(method)) {
    const auto file = o.model.empty() ? path(o, "models/" + std::string(variant_name(*v)) + ".ckpt")
                                      : o.model;
    ckpt = nn::load_checkpoint<float>(file);
    if (ckpt->model.config.variant != *v)
      throw Error(ErrorKind::InvalidArgument, "model variant does not match method");
    if (!(ckpt->vocab == vocab))
      throw Error(ErrorKind::InvalidArgument, "model vocabulary does not match vocab.txt");
  }
  const auto convs = load_conversations(o, vocab);
  std::vector<RecordingHyps> recs;
  if (method == Method::None) {
    const auto split = parse_split(o.split);
    for (std::size_t i = 0; i < convs.size(); ++i)
      recs.push_back(recognize_whole(convs[i], o.spec.error, vocab.num_words(), o.spec.long_form,
                                     channel_seed(o.seed, split, static_cast<std::int32_t>(i))));
  } else {
    recs = io::recordings_from_jsonl(io::read_file(path(o, "windows.jsonl")),
                                     io::read_file(path(o, "hyps.jsonl")), vocab);
    require(recs.size() == convs.size(), "hyps.jsonl and conversations.jsonl disagree",
            ErrorKind::Format);
  }
  std::string text;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto out = run_method(method, convs[i], recs[i], ckpt ? &ckpt->model : nullptr,
                                o.spec.beam);
    text += json({{"recording", i}, {"transcripts", io::transcripts_to_json(out, vocab)}}).dump() +
            "\n";
  }
  io::write_file(path(o, "stitched_" + o.method + ".jsonl"), text);
  log("stitched " + std::to_string(recs.size()) + " recordings with " + o.method);
}

void cmd_eval(Options& o) {
  const auto vocab = load_vocab(o);
  const auto convs = load_conversations(o, vocab);
  const auto file = path(o, "stitched_" + o.method + ".jsonl");
  const auto lines = io::parse_jsonl(io::read_file(file), file);
  require(lines.size() == convs.size(), file + " does not match conversations.jsonl",
          ErrorKind::Format);
  ErrorCounts c;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto hyp = io::transcripts_from_json(
        io::guarded(file, [&] { return lines[i].at("transcripts"); }), vocab);
    for (const auto& [k, _] : hyp)
      require(k >= 0 && k < convs[i].num_speakers, "speaker id out of range", ErrorKind::Format);
    c += sa_error_counts(hyp, per_speaker_reference(convs[i]));
  }
  ensure_dir(path(o, "reports"));
  const json report = {{"method", o.method},
                       {"sa_wer", sa_wer_percent(c)},
                       {"substitutions", c.substitutions},
                       {"deletions", c.deletions},
                       {"insertions", c.insertions},
                       {"ref_words", c.ref_words}};
  io::write_file(path(o, "reports/eval_" + o.method + ".json"), report.dump(2) + "\n");
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s SA-WER %.2f%%", o.method.c_str(), sa_wer_percent(c));
  std::cout << buf << "\n";
}

json result_to_json(const ExperimentResult& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"method", std::string(method_name(row.method))},
                    {"overlap_ratio", row.overlap_ratio ? json(*row.overlap_ratio) : json(nullptr)},
                    {"dev_sa_wer", row.dev_sa_wer},
                    {"test_sa_wer", row.test_sa_wer},
                    {"dev_by_seed", row.dev_by_seed},
                    {"test_by_seed", row.test_by_seed},
                    {"decode_cost", row.decode_cost},
                    {"windows_decoded", row.windows_decoded}});
  json training = json::array();
  for (const auto& t : r.training)
    training.push_back({{"seed", t.seed},
                        {"variant", std::string(variant_name(t.variant))},
                        {"train_examples", t.train_examples},
                        {"epochs", t.epochs},
                        {"best_epoch", t.best_epoch},
                        {"best_dev_loss", t.best_dev_loss}});
  return {{"rows", rows}, {"training", training}};
}

void cmd_experiment(Options& o) {
  auto& spec = o.spec;
  spec.seeds = o.seeds.empty() ? std::vector<std::uint64_t>{o.seed} : o.seeds;
  spec.overlap_ratios = o.overlaps;
  spec.methods.clear();
  for (const auto& m : o.methods) spec.methods.push_back(parse_method(m));
  const auto res = run_experiment(spec, {log});
  ensure_dir(path(o, "reports"));
  io::write_file(path(o, "reports/experiment.json"), result_to_json(res).dump(2) + "\n");
  const auto table = render_table(res);
  io::write_file(path(o, "reports/experiment.txt"), table);
  std::cout << table;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Hypothesis stitching for windowed speaker-attributed transcription"};
  app.set_config("--config", "", "key = value file; command-line values take precedence");
  app.require_subcommand(1);
  app.fallthrough();

  auto* sim = app.add_subcommand("simulate", "Generate conversations");
  add_common(sim, o);
  add_sim_options(sim, o.spec.sim);
  sim->add_option("--count", o.count, "Number of conversations");
  sim->add_option("--split", o.split, "Seed stream: train, dev or test");

  auto* seg = app.add_subcommand("segment", "Window conversations and run the error channel");
  add_common(seg, o);
  add_error_options(seg, o.spec.error);
  seg->add_option("--window-len", o.spec.window_len, "Window length (s)");
  seg->add_option("--overlap", o.overlap, "Overlap ratio of adjacent windows");
  seg->add_option("--split", o.split, "Seed stream: train, dev or test");

  auto* corpus = app.add_subcommand("build-corpus", "Build stitcher training corpora");
  add_common(corpus, o);
  add_sim_options(corpus, o.spec.sim);
  add_error_options(corpus, o.spec.error);
  corpus->add_option("--window-len", o.spec.window_len, "Window length (s)");
  corpus->add_option("--overlap", o.overlap, "Overlap ratio of adjacent windows");
  corpus->add_option("--train", o.spec.train_count, "Training conversations");
  corpus->add_option("--dev", o.spec.dev_count, "Development conversations");
  corpus->add_option("--variants", o.variants, "Encodings to emit");

  auto* train = app.add_subcommand("train", "Train a stitcher on a built corpus");
  add_common(train, o);
  add_stitcher_options(train, o.spec);
  train->add_option("--variant", o.variant, "align_pairs, serial_wc or serial_wcoe");

  auto* stitch = app.add_subcommand("stitch", "Fuse window hypotheses per speaker");
  add_common(stitch, o);
  add_error_options(stitch, o.spec.error);
  stitch->add_option("--method", o.method, "none, block, overlap, stitch_align, stitch_wc, stitch_wcoe");
  stitch->add_option("--model", o.model, "Checkpoint (default models/<variant>.ckpt)");
  stitch->add_option("--beam", o.spec.beam, "Beam width for stitcher decoding");
  stitch->add_option("--split", o.split, "Seed stream for whole-recording decoding");
  stitch->add_option("--calibration", o.spec.long_form.calibration_seconds,
                     "Length (s) beyond which whole-recording errors grow");
  stitch->add_option("--growth", o.spec.long_form.growth, "Error growth per calibration length");

  auto* ev = app.add_subcommand("eval", "Score stitched transcripts with SA-WER");
  add_common(ev, o);
  ev->add_option("--method", o.method, "Method whose output to score");

  auto* exp = app.add_subcommand("experiment", "Run the full method grid");
  add_common(exp, o);
  add_sim_options(exp, o.spec.sim);
  add_error_options(exp, o.spec.error);
  add_stitcher_options(exp, o.spec);
  exp->add_option("--seeds", o.seeds, "Seeds to average over (default: --seed)");
  exp->add_option("--window-len", o.spec.window_len, "Window length (s)");
  exp->add_option("--overlaps", o.overlaps, "Overlap ratios for the serialized stitchers");
  exp->add_option("--train-overlap", o.spec.train_overlap_ratio, "Overlap ratio used for training");
  exp->add_option("--methods", o.methods, "Methods to evaluate");
  exp->add_option("--train", o.spec.train_count, "Training conversations per seed");
  exp->add_option("--dev", o.spec.dev_count, "Development conversations per seed");
  exp->add_option("--test", o.spec.test_count, "Test conversations per seed");
  exp->add_option("--beam", o.spec.beam, "Beam width for stitcher decoding");
  exp->add_option("--calibration", o.spec.long_form.calibration_seconds,
                  "Length (s) beyond which whole-recording errors grow");
  exp->add_option("--growth", o.spec.long_form.growth, "Error growth per calibration length");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: invalid_argument: " << e.what() << "\n";
    return 2;
  }

  try {
    o.spec.sim.validate();
    o.spec.error.validate();
    if (*sim) cmd_simulate(o);
    else if (*seg) cmd_segment(o);
    else if (*corpus) cmd_build_corpus(o);
    else if (*train) cmd_train(o);
    else if (*stitch) cmd_stitch(o);
    else if (*ev) cmd_eval(o);
    else if (*exp) cmd_experiment(o);
  } catch (const Error& e) {
    std::cerr << "error: " << error_kind_name(e.kind()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
