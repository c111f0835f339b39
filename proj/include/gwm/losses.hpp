// Training losses (with missing-label masks), evaluation metrics, ROC-AUC.
#pragma once

#include "gwm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace gwm {

class LossError : public std::runtime_error {
 public:
  explicit LossError(const std::string& what) : std::runtime_error(what) {}
};

class AucError : public std::runtime_error {
 public:
  explicit AucError(const std::string& what) : std::runtime_error(what) {}
};

// Mean binary cross-entropy from logits over unmasked entries, in the
// overflow-safe form max(x,0) - x*y + log(1 + exp(-|x|)).
inline Tensor masked_bce_loss(const Tensor& logits, const Tensor& labels, const Tensor& mask) {
  if (logits.shape() != labels.shape() || logits.shape() != mask.shape())
    throw ShapeError("masked_bce_loss: shapes disagree: " + detail::shape_str(logits.shape()) +
                     " / " + detail::shape_str(labels.shape()) + " / " +
                     detail::shape_str(mask.shape()));
  double count = 0.0;
  for (double m : mask.values()) count += m;
  if (count == 0.0) throw LossError("masked_bce_loss: every label is masked out");

  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask.values()[i] == 0.0) continue;
    const double x = logits.values()[i];
    const double y = labels.values()[i];
    total += std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
  }
  return make_op(OpKind::BceLoss, {}, {total / count}, {logits, labels, mask},
                 [count](detail::TensorNode& self) {
                   auto& in = *self.inputs[0];
                   const auto& y = self.inputs[1]->values;
                   const auto& m = self.inputs[2]->values;
                   if (!in.tracked) return;
                   in.ensure_grad();
                   const double g = self.grad[0] / count;
                   for (std::size_t i = 0; i < in.values.size(); ++i) {
                     if (m[i] == 0.0) continue;
                     const double x = in.values[i];
                     const double sig =
                         x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
                     in.grad[i] += g * (sig - y[i]);
                   }
                 });
}

// Mean squared error over unmasked entries.
inline Tensor masked_mse_loss(const Tensor& pred, const Tensor& target, const Tensor& mask) {
  if (pred.shape() != target.shape() || pred.shape() != mask.shape())
    throw ShapeError("masked_mse_loss: shapes disagree: " + detail::shape_str(pred.shape()) +
                     " / " + detail::shape_str(target.shape()) + " / " +
                     detail::shape_str(mask.shape()));
  double count = 0.0;
  for (double m : mask.values()) count += m;
  if (count == 0.0) throw LossError("masked_mse_loss: every target is masked out");

  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (mask.values()[i] == 0.0) continue;
    const double d = pred.values()[i] - target.values()[i];
    total += d * d;
  }
  return make_op(OpKind::MseLoss, {}, {total / count}, {pred, target, mask},
                 [count](detail::TensorNode& self) {
                   auto& in = *self.inputs[0];
                   const auto& y = self.inputs[1]->values;
                   const auto& m = self.inputs[2]->values;
                   if (!in.tracked) return;
                   in.ensure_grad();
                   const double g = self.grad[0] / count;
                   for (std::size_t i = 0; i < in.values.size(); ++i)
                     if (m[i] != 0.0) in.grad[i] += g * 2.0 * (in.values[i] - y[i]);
                 });
}

inline Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  return masked_mse_loss(pred, target, Tensor::constant(pred.shape(),
                                                        std::vector<double>(pred.size(), 1.0)));
}

inline double mae_metric(const std::vector<double>& pred, const std::vector<double>& target,
                         const std::vector<double>* mask = nullptr) {
  double total = 0.0, count = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (mask && (*mask)[i] == 0.0) continue;
    total += std::abs(pred[i] - target[i]);
    count += 1.0;
  }
  if (count == 0.0) throw LossError("mae_metric: every target is masked out");
  return total / count;
}

// Rank-statistic ROC-AUC with ties counted half. Midranks are accumulated as
// exact integers (doubled), so auc(s) + auc(-s) == 1 holds exactly.
inline double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw AucError("roc_auc: size mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  long long pos = 0, neg = 0;
  for (int y : labels) (y != 0 ? pos : neg) += 1;
  if (pos == 0 || neg == 0) throw AucError("roc_auc: needs both classes present");

  // twice the midrank of each tie group = (first rank) + (last rank)
  long long pos_rank2 = 0;  // 2 * sum of midranks of positives
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const long long rank2 = static_cast<long long>(i + 1) + static_cast<long long>(j + 1);
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]] != 0) pos_rank2 += rank2;
    i = j + 1;
  }
  const long long numer2 = pos_rank2 - pos * (pos + 1);  // 2*(U statistic)
  const long long denom2 = 2 * pos * neg;
  return static_cast<double>(numer2) / static_cast<double>(denom2);
}

}  // namespace gwm
