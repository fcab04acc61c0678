#pragma once

// Finite-difference verification of the differentiable-computation contract.
// A loss callable must (a) return the scalar loss evaluated at the current
// parameter values and (b) leave analytic gradients in each Parameter::grad.
// It must be deterministic: noise draws have to be frozen by the caller
// (reparameterized), and two evaluations at the same point must agree
// bit-for-bit or the check aborts.

#include <cmath>
#include <string>
#include <vector>

#include "sgt/ad.hpp"

namespace sgt {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  Eigen::Index worst_row = 0;
  Eigen::Index worst_col = 0;
  bool passed(double rel_tol) const { return max_rel_error < rel_tol; }
};

template <typename Scalar, typename LossFn>
GradCheckReport grad_check(LossFn&& loss_fn,
                           const std::vector<Parameter<Scalar>*>& params,
                           double epsilon, double rel_tol,
                           double denom_floor = 1e-8) {
  (void)rel_tol;  // recorded by callers via report.passed(rel_tol)
  for (auto* p : params) p->zero_grad();
  const Scalar l0 = loss_fn();
  const Scalar l1 = [&] {
    std::vector<Mat<Scalar>> saved;
    for (auto* p : params) saved.push_back(p->grad);
    for (auto* p : params) p->zero_grad();
    const Scalar v = loss_fn();
    for (size_t i = 0; i < params.size(); ++i) params[i]->grad = saved[i];
    return v;
  }();
  if (std::memcmp(&l0, &l1, sizeof(Scalar)) != 0)
    throw std::runtime_error(
        "grad_check: loss is non-deterministic (two evaluations differ)");

  GradCheckReport report;
  for (auto* p : params) {
    for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
        const Scalar saved = p->value(r, c);
        p->value(r, c) = saved + static_cast<Scalar>(epsilon);
        const double lp = eval_value_only(loss_fn, params);
        p->value(r, c) = saved - static_cast<Scalar>(epsilon);
        const double lm = eval_value_only(loss_fn, params);
        p->value(r, c) = saved;
        const double fd = (lp - lm) / (2.0 * epsilon);
        const double an = static_cast<double>(p->grad(r, c));
        const double denom = std::max(std::abs(an), std::abs(fd));
        const double err =
            denom < denom_floor ? std::abs(an - fd) : std::abs(an - fd) / denom;
        if (err > report.max_rel_error) {
          report.max_rel_error = err;
          report.worst_parameter = p->name;
          report.worst_row = r;
          report.worst_col = c;
        }
      }
    }
  }
  return report;
}

// Evaluate the loss without disturbing the analytic gradients under test.
template <typename Scalar, typename LossFn>
double eval_value_only(LossFn&& loss_fn,
                       const std::vector<Parameter<Scalar>*>& params) {
  std::vector<Mat<Scalar>> saved;
  saved.reserve(params.size());
  for (auto* p : params) saved.push_back(p->grad);
  const double v = static_cast<double>(loss_fn());
  for (size_t i = 0; i < params.size(); ++i) params[i]->grad = saved[i];
  return v;
}

}  // namespace sgt
