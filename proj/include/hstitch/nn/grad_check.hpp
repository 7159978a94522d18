#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "hstitch/error.hpp"
#include "hstitch/nn/train.hpp"
#include "hstitch/rng.hpp"

namespace hstitch::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::int32_t checked = 0;
  std::int32_t skipped_kinks = 0;  // coordinates whose ReLU pattern flipped under +-eps
  std::string worst_param;
};

// |a - n| / max(|a|, |n|, floor). The floor keeps coordinates whose true
// gradient is ~0 from turning finite-difference rounding into huge ratios.
inline double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

namespace detail {

struct BatchLoss {
  double loss = 0.0;
  std::uint64_t relu_signature = 0;
};

inline BatchLoss batch_loss(const StitcherModel<double>& m, const std::vector<TrainExample>& batch,
                            std::int64_t tokens, ParamVec<double>* grads) {
  BatchLoss out;
  for (const auto& ex : batch) {
    std::uint64_t sig = 0;
    out.loss += example_loss(m, ex, nullptr, grads, 1.0 / static_cast<double>(tokens), &sig).loss;
    out.relu_signature = splitmix64(out.relu_signature ^ sig);
  }
  out.loss /= static_cast<double>(tokens);
  return out;
}

}  // namespace detail

// Central differences on the token-averaged smoothed loss of batch, in
// evaluation mode. Every parameter tensor gets at least one coordinate; the
// rest are drawn uniformly.
inline GradCheckResult grad_check(StitcherModel<double> model,
                                  const std::vector<TrainExample>& batch,
                                  std::int32_t num_coords = 200, double eps = 1e-4,
                                  std::uint64_t seed = 0, double floor = 1e-6) {
  require(!batch.empty(), "grad check needs at least one example");
  require(num_coords >= 1, "grad check needs at least one coordinate");
  std::int64_t tokens = 0;
  for (const auto& ex : batch) tokens += static_cast<std::int64_t>(ex.target.size() + 1);

  ParamVec<double> grads(model.params.size(), 0.0);
  const auto base = detail::batch_loss(model, batch, tokens, &grads);
  for (double g : grads)
    if (!std::isfinite(g)) throw Error(ErrorKind::Numeric, "non-finite analytic gradient");

  Rng rng(derive_seed(seed, stream_id("grad_check")));
  std::vector<std::size_t> coords;
  std::set<std::size_t> seen;
  for (const auto& p : model.layout.named) {
    const auto c = p.slot.offset + static_cast<std::size_t>(rng.uniform_int(
                                       0, static_cast<std::int64_t>(p.slot.size()) - 1));
    if (seen.insert(c).second) coords.push_back(c);
  }
  const auto total = model.params.size();
  const auto target = std::min<std::size_t>(total, static_cast<std::size_t>(num_coords));

  auto owner = [&](std::size_t c) -> const std::string& {
    for (const auto& p : model.layout.named)
      if (c >= p.slot.offset && c < p.slot.offset + p.slot.size()) return p.name;
    return model.layout.named.back().name;
  };

  GradCheckResult res;
  std::size_t next = 0;
  while (static_cast<std::size_t>(res.checked) < target) {
    if (next == coords.size()) {
      if (seen.size() == total) break;
      std::size_t c;
      do {
        c = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(total) - 1));
      } while (!seen.insert(c).second);
      coords.push_back(c);
    }
    const auto c = coords[next++];
    const double orig = model.params[c];
    model.params[c] = orig + eps;
    const auto up = detail::batch_loss(model, batch, tokens, nullptr);
    model.params[c] = orig - eps;
    const auto down = detail::batch_loss(model, batch, tokens, nullptr);
    model.params[c] = orig;
    if (!std::isfinite(up.loss) || !std::isfinite(down.loss))
      throw Error(ErrorKind::Numeric, "non-finite loss during gradient check");
    if (up.relu_signature != base.relu_signature || down.relu_signature != base.relu_signature) {
      ++res.skipped_kinks;
      continue;
    }
    const double numeric = (up.loss - down.loss) / (2.0 * eps);
    const double err = relative_error(grads[c], numeric, floor);
    if (err >= res.max_rel_error) {
      res.max_rel_error = err;
      res.worst_param = owner(c);
    }
    ++res.checked;
  }
  return res;
}

}  // namespace hstitch::nn
