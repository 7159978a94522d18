#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "hstitch/error.hpp"
#include "hstitch/nn/model.hpp"

namespace hstitch::nn {

struct LossSum {
  double loss = 0.0;
  std::int64_t tokens = 0;
  std::int64_t correct = 0;  // argmax hits

  double mean() const { return tokens > 0 ? loss / static_cast<double>(tokens) : 0.0; }
  double accuracy() const {
    return tokens > 0 ? static_cast<double>(correct) / static_cast<double>(tokens) : 0.0;
  }
  LossSum& operator+=(const LossSum& o) {
    loss += o.loss;
    tokens += o.tokens;
    correct += o.correct;
    return *this;
  }
};

// Label-smoothed cross entropy summed over rows:
//   (1 - s) * -log p[y] + s * mean_c(-log p[c]).
// When dlogits is given it receives weight * d(sum)/d(logits).
template <typename T>
LossSum smoothed_cross_entropy(const Mat<T>& logits, const std::vector<std::int32_t>& classes,
                               double smoothing, Mat<T>* dlogits = nullptr, double weight = 1.0) {
  require(static_cast<std::size_t>(logits.rows()) == classes.size(),
          "one target class per logit row expected");
  const auto C = logits.cols();
  LossSum out;
  if (dlogits) dlogits->resize(logits.rows(), C);
  const double u = smoothing / static_cast<double>(C);
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const auto y = classes[static_cast<std::size_t>(r)];
    require(y >= 0 && y < C, "target class out of range");
    const auto row = logits.row(r).array();
    Eigen::Index arg = 0;
    const T mx = row.maxCoeff(&arg);
    const Eigen::Array<T, 1, Eigen::Dynamic> e = (row - mx).exp();
    const double sum = static_cast<double>(e.sum());
    const double lse = static_cast<double>(mx) + std::log(sum);
    const double nll = lse - static_cast<double>(row(y));
    const double mean_nll = lse - static_cast<double>(row.sum()) / static_cast<double>(C);
    const double l = (1.0 - smoothing) * nll + smoothing * mean_nll;
    if (!std::isfinite(l)) throw Error(ErrorKind::Numeric, "non-finite loss");
    out.loss += l;
    out.tokens += 1;
    out.correct += arg == y ? 1 : 0;
    if (dlogits) {
      auto d = dlogits->row(r).array();
      d = e * static_cast<T>(weight / sum) - static_cast<T>(weight * u);
      d(y) -= static_cast<T>(weight * (1.0 - smoothing));
    }
  }
  return out;
}

// Output classes for a target word sequence followed by </s>.
inline std::vector<std::int32_t> target_classes(const TokenSeq& target) {
  std::vector<std::int32_t> out;
  out.reserve(target.size() + 1);
  for (auto t : target) {
    if (!t.is_word()) throw Error(ErrorKind::InvalidArgument, "target must contain words only");
    out.push_back(StitcherConfig::class_of(t));
  }
  out.push_back(StitcherConfig::class_of(Token(Special::Eos)));
  return out;
}

}  // namespace hstitch::nn
