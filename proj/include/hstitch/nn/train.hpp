#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "hstitch/error.hpp"
#include "hstitch/nn/loss.hpp"
#include "hstitch/nn/model.hpp"
#include "hstitch/nn/transformer.hpp"
#include "hstitch/rng.hpp"

namespace hstitch::nn {

struct TrainExample {
  StitcherInput input;
  TokenSeq target;  // words only; </s> is appended internally
};

// Loss of one example, optionally accumulating weight * gradient.
template <typename T>
LossSum example_loss(const StitcherModel<T>& m, const TrainExample& ex, Rng* drop,
                     ParamVec<T>* grads = nullptr, double weight = 1.0,
                     std::uint64_t* relu_signature = nullptr) {
  Workspace<T> ws;
  ws.track_relu = relu_signature != nullptr;
  encode(m, ex.input, ws, drop);
  const Mat<T> logits = decode_logits(m, ex.target, ws, drop);
  const auto classes = target_classes(ex.target);
  if (relu_signature) *relu_signature = ws.relu_signature;
  if (!grads) return smoothed_cross_entropy(logits, classes, m.config.label_smoothing);
  Mat<T> dlogits;
  const auto l = smoothed_cross_entropy(logits, classes, m.config.label_smoothing, &dlogits, weight);
  backward(m, ws, dlogits, *grads);
  return l;
}

// Token-averaged smoothed loss in evaluation mode.
template <typename T>
LossSum evaluate(const StitcherModel<T>& m, const std::vector<TrainExample>& data) {
  LossSum total;
  for (const auto& ex : data) total += example_loss(m, ex, nullptr);
  return total;
}

template <typename T>
class Adam {
 public:
  Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(n, T(0)), v_(n, T(0)) {}

  void set_lr(double lr) { lr_ = lr; }

  void step(ParamVec<T>& params, const ParamVec<T>& grads) {
    require(params.size() == m_.size() && grads.size() == m_.size(), "optimizer size mismatch");
    ++t_;
    const auto n = static_cast<Eigen::Index>(params.size());
    using Arr = Eigen::Array<T, Eigen::Dynamic, 1>;
    Eigen::Map<Arr> p(params.data(), n), m(m_.data(), n), v(v_.data(), n);
    const Eigen::Map<const Arr> g(grads.data(), n);
    const T c1 = T(1.0 - std::pow(b1_, static_cast<double>(t_)));
    const T c2 = T(1.0 - std::pow(b2_, static_cast<double>(t_)));
    m = T(b1_) * m + T(1.0 - b1_) * g;
    v = T(b2_) * v + T(1.0 - b2_) * g.square();
    p -= T(lr_) * (m / c1) / ((v / c2).sqrt() + T(eps_));
  }

  std::int64_t steps() const { return t_; }

 private:
  double lr_, b1_, b2_, eps_;
  ParamVec<T> m_, v_;
  std::int64_t t_ = 0;
};

// Stops once the dev loss has failed to improve on its best value for
// `patience` consecutive epochs.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::int32_t patience) : patience_(patience) {
    require(patience >= 1, "patience must be >= 1");
  }

  // Returns true if this epoch is the new best.
  bool observe(double dev_loss) {
    ++epoch_;
    if (dev_loss < best_) {
      best_ = dev_loss;
      best_epoch_ = epoch_;
      stale_ = 0;
      return true;
    }
    ++stale_;
    return false;
  }

  bool should_stop() const { return stale_ >= patience_; }
  std::int32_t best_epoch() const { return best_epoch_; }
  double best() const { return best_; }

 private:
  std::int32_t patience_;
  std::int32_t epoch_ = 0;
  std::int32_t best_epoch_ = 0;
  std::int32_t stale_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

struct EpochReport {
  std::int32_t epoch = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double dev_accuracy = 0.0;
  bool improved = false;
  double seconds = 0.0;
};

struct TrainOptions {
  std::int32_t max_epochs = 30;
  std::int32_t batch_size = 16;  // examples per update
  std::int32_t patience = 3;
  std::uint64_t seed = 0;
  // Apply a fresh random permutation of the word ids to every training
  // example. Only sound when word identity carries no information, as with
  // simulated conversations.
  bool relabel_words = false;
  // Scale the learning rate linearly from 1 down to 0 over max_epochs.
  bool linear_decay = false;
  std::function<void(const EpochReport&)> on_epoch;
};

// Same example with every word id w replaced by perm[w - first word id].
inline TrainExample relabel(const TrainExample& ex, const std::vector<std::int32_t>& perm) {
  auto map = [&](Token t) {
    return t.is_word() ? Token(perm[static_cast<std::size_t>(t.id - kNumReserved)]) : t;
  };
  TrainExample out = ex;
  for (auto& t : out.input.tokens) t = map(t);
  for (auto& p : out.input.pairs) {
    if (p.odd) p.odd->token = map(p.odd->token);
    if (p.even) p.even->token = map(p.even->token);
  }
  for (auto& t : out.target) t = map(t);
  return out;
}

inline std::vector<std::int32_t> random_word_permutation(std::int32_t vocab_size, Rng& rng) {
  std::vector<std::int32_t> perm(static_cast<std::size_t>(vocab_size - kNumReserved));
  std::iota(perm.begin(), perm.end(), kNumReserved);
  for (std::size_t i = perm.size(); i > 1; --i)
    std::swap(perm[i - 1],
              perm[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)))]);
  return perm;
}

// Learning-rate multiplier of update `step` (1-based) out of total_steps.
inline double linear_decay_factor(std::int64_t step, double total_steps) {
  return 1.0 - static_cast<double>(step - 1) / total_steps;
}

template <typename T>
struct TrainResult {
  StitcherModel<T> model;  // parameters of the best dev epoch
  std::vector<EpochReport> history;
  std::int32_t best_epoch = 0;
  double best_dev_loss = 0.0;
  bool stopped_early = false;
};

// Mini-batch Adam on token-averaged smoothed cross entropy. Deterministic for
// a given (initial model, data, options).
template <typename T>
TrainResult<T> train(StitcherModel<T> model, const std::vector<TrainExample>& train_set,
                     const std::vector<TrainExample>& dev_set, const TrainOptions& opt) {
  require(!train_set.empty(), "empty training set");
  require(!dev_set.empty(), "empty dev set");
  require(opt.max_epochs >= 1, "max_epochs must be >= 1");
  require(opt.batch_size >= 1, "batch_size must be >= 1");

  TrainResult<T> res;
  res.model = model;
  Adam<T> adam(model.params.size(), model.config.lr);
  EarlyStopping stop(opt.patience);
  ParamVec<T> grads(model.params.size());
  std::vector<std::size_t> order(train_set.size());
  std::uint64_t example_counter = 0;
  const auto batches = (train_set.size() + static_cast<std::size_t>(opt.batch_size) - 1) /
                       static_cast<std::size_t>(opt.batch_size);
  const double total_steps = static_cast<double>(batches) * opt.max_epochs;

  for (std::int32_t epoch = 1; epoch <= opt.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle(derive_seed(opt.seed, stream_id("shuffle"), static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(
                                  shuffle.uniform_int(0, static_cast<std::int64_t>(i - 1)))]);

    LossSum train_sum;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(opt.batch_size)) {
      const auto e = std::min(order.size(), b + static_cast<std::size_t>(opt.batch_size));
      std::int64_t batch_tokens = 0;
      for (auto i = b; i < e; ++i)
        batch_tokens += static_cast<std::int64_t>(train_set[order[i]].target.size() + 1);
      std::fill(grads.begin(), grads.end(), T(0));
      for (auto i = b; i < e; ++i) {
        const auto& ex = train_set[order[i]];
        const double w = 1.0 / static_cast<double>(batch_tokens);
        Rng drop(derive_seed(opt.seed, stream_id("dropout"), example_counter));
        if (opt.relabel_words) {
          Rng r(derive_seed(opt.seed, stream_id("relabel"), example_counter));
          const auto perm = random_word_permutation(model.config.vocab_size, r);
          train_sum += example_loss(model, relabel(ex, perm), &drop, &grads, w);
        } else {
          train_sum += example_loss(model, ex, &drop, &grads, w);
        }
        ++example_counter;
      }
      if (!Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>(
               grads.data(), static_cast<Eigen::Index>(grads.size()))
               .allFinite())
        throw Error(ErrorKind::Numeric, "non-finite gradient");
      const auto step = adam.steps() + 1;
      const double decay = opt.linear_decay ? linear_decay_factor(step, total_steps) : 1.0;
      adam.set_lr(model.config.lr_at(step) * decay);
      adam.step(model.params, grads);
    }

    const auto dev = evaluate(model, dev_set);
    EpochReport rep;
    rep.epoch = epoch;
    rep.train_loss = train_sum.mean();
    rep.dev_loss = dev.mean();
    rep.dev_accuracy = dev.accuracy();
    rep.improved = stop.observe(rep.dev_loss);
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (rep.improved) res.model = model;
    res.history.push_back(rep);
    if (opt.on_epoch) opt.on_epoch(rep);
    if (stop.should_stop()) {
      res.stopped_early = true;
      break;
    }
  }
  res.best_epoch = stop.best_epoch();
  res.best_dev_loss = stop.best();
  return res;
}

}  // namespace hstitch::nn
