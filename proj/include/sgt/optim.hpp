#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgt/ad.hpp"

namespace sgt {

struct LrSchedule {
  float base_rate = 3e-4f;
  float warmup_fraction = 0.0f;
  bool cosine_decay = true;

  float at(int step, int total_steps) const {
    const float warm = warmup_fraction * static_cast<float>(total_steps);
    float r = base_rate;
    if (warm > 0 && step < warm) r *= static_cast<float>(step + 1) / warm;
    if (cosine_decay) {
      const float progress =
          static_cast<float>(step) / std::max(1, total_steps);
      r *= 0.5f * (1.0f + std::cos(static_cast<float>(M_PI) * progress));
    }
    return r;
  }
};

enum class OptimizerKind { kAdam, kSgdMomentum };

inline OptimizerKind optimizer_from_name(const std::string& name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd-momentum") return OptimizerKind::kSgdMomentum;
  throw std::invalid_argument("unknown optimizer '" + name + "'");
}

// Rescales gradients so their global L2 norm is at most max_norm.
// Returns the pre-clip norm.
template <typename Scalar>
double clip_global_norm(const std::vector<Parameter<Scalar>*>& params,
                        double max_norm) {
  double sq = 0.0;
  for (auto* p : params) sq += p->grad.template cast<double>().squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const Scalar s = static_cast<Scalar>(max_norm / norm);
    for (auto* p : params) p->grad *= s;
  }
  return norm;
}

template <typename Scalar>
class Optimizer {
 public:
  Optimizer(std::vector<Parameter<Scalar>*> params, OptimizerKind kind,
            Scalar beta1 = Scalar(0.9), Scalar beta2 = Scalar(0.999),
            Scalar eps = Scalar(1e-8), Scalar momentum = Scalar(0.9))
      : params_(std::move(params)),
        kind_(kind),
        beta1_(beta1),
        beta2_(beta2),
        eps_(eps),
        momentum_(momentum) {
    for (auto* p : params_) {
      m_.push_back(Mat<Scalar>::Zero(p->value.rows(), p->value.cols()));
      if (kind_ == OptimizerKind::kAdam)
        v_.push_back(Mat<Scalar>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void step(Scalar lr) {
    ++t_;
    for (size_t i = 0; i < params_.size(); ++i) {
      Parameter<Scalar>& p = *params_[i];
      if (kind_ == OptimizerKind::kSgdMomentum) {
        m_[i] = momentum_ * m_[i] + p.grad;
        p.value -= lr * m_[i];
        continue;
      }
      m_[i] = beta1_ * m_[i] + (Scalar(1) - beta1_) * p.grad;
      v_[i] = beta2_ * v_[i] +
              (Scalar(1) - beta2_) * p.grad.cwiseProduct(p.grad);
      const Scalar c1 = Scalar(1) - std::pow(beta1_, static_cast<Scalar>(t_));
      const Scalar c2 = Scalar(1) - std::pow(beta2_, static_cast<Scalar>(t_));
      Mat<Scalar> denom = (v_[i] / c2).cwiseSqrt().array() + eps_;
      p.value -= lr * (m_[i] / c1).cwiseQuotient(denom);
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

 private:
  std::vector<Parameter<Scalar>*> params_;
  OptimizerKind kind_;
  Scalar beta1_, beta2_, eps_, momentum_;
  std::vector<Mat<Scalar>> m_, v_;
  int t_ = 0;
};

}  // namespace sgt
