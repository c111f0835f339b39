// Adam optimizer with bias correction.
#pragma once

#include "gwm/tensor.hpp"

#include <cmath>
#include <vector>

namespace gwm {

class Adam {
 public:
  explicit Adam(std::vector<Tensor> params, double alpha = 0.001, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)), alpha_(alpha), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Tensor& p : params_) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }

  long long step_count() const { return t_; }

  void zero_grad() {
    for (Tensor& p : params_) p.zero_grad();
  }

  // One update from the gradients currently stored on the parameters.
  // Rejects non-finite gradients before touching any state.
  void step() {
    for (std::size_t i = 0; i < params_.size(); ++i)
      for (double g : params_[i].grad())
        if (!std::isfinite(g))
          throw NumericError("adam: non-finite gradient in parameter " + std::to_string(i));
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& vals = params_[i].values();
      const auto& grad = params_[i].grad();
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t k = 0; k < vals.size(); ++k) {
        m[k] = beta1_ * m[k] + (1.0 - beta1_) * grad[k];
        v[k] = beta2_ * v[k] + (1.0 - beta2_) * grad[k] * grad[k];
        const double mhat = m[k] / c1;
        const double vhat = v[k] / c2;
        vals[k] -= alpha_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  double alpha_, beta1_, beta2_, eps_;
  long long t_ = 0;
};

}  // namespace gwm
