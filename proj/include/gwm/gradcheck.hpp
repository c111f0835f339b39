// Finite-difference verification of analytic gradients.
#pragma once

#include "gwm/tensor.hpp"

#include <functional>
#include <string>
#include <vector>

namespace gwm {

struct GradCheckResult {
  bool ok = true;
  double max_rel_err = 0.0;   // worst relative error across all checked entries
  double max_abs_err = 0.0;
  std::string worst;          // description of the worst entry
};

// Compares analytic gradients of f(params) against central differences
// (f(x+h) - f(x-h)) / 2h for every entry of every tracked parameter.
// Relative error uses max(|analytic|, |numeric|, eps_floor) as denominator
// so near-zero gradients are judged absolutely.
inline GradCheckResult grad_check(const std::function<Tensor(void)>& f,
                                  const std::vector<Tensor>& params, double h = 1e-5,
                                  double rel_tol = 1e-5, double eps_floor = 1e-8) {
  for (const Tensor& p : params)
    if (!p.tracked())
      throw ShapeError("grad_check: parameter is not tracked");

  Tensor loss = f();
  if (loss.rank() != 0)
    throw ShapeError("grad_check: objective must be scalar, got " +
                     detail::shape_str(loss.shape()));
  for (const Tensor& p : params) const_cast<Tensor&>(p).zero_grad();
  backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const Tensor& p : params) analytic.push_back(p.grad());

  GradCheckResult res;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor p = params[pi];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double orig = p.values()[i];
      p.values()[i] = orig + h;
      const double up = f().item();
      p.values()[i] = orig - h;
      const double down = f().item();
      p.values()[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[pi][i];
      const double abs_err = std::abs(a - numeric);
      const double denom = std::max({std::abs(a), std::abs(numeric), eps_floor});
      const double rel_err = abs_err / denom;
      if (rel_err > res.max_rel_err) {
        res.max_rel_err = rel_err;
        res.worst = "param " + std::to_string(pi) + " entry " + std::to_string(i) +
                    ": analytic " + std::to_string(a) + " vs numeric " + std::to_string(numeric);
      }
      res.max_abs_err = std::max(res.max_abs_err, abs_err);
    }
  }
  res.ok = res.max_rel_err <= rel_tol;
  return res;
}

}  // namespace gwm
