#pragma once

// Transformer building blocks shared by the target model and the transform
// estimator.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sgt/ad.hpp"

namespace sgt {

inline Eigen::Index head_dim(int dim, int heads) {
  if (heads <= 0 || dim % heads != 0)
    throw std::invalid_argument("heads must divide the model dimension");
  return dim / heads;
}

// Fixed sinusoidal position encoding, rows = positions.
template <typename Scalar>
Mat<Scalar> sinusoidal_positions(int context, int dim) {
  Mat<Scalar> pe(context, dim);
  for (int t = 0; t < context; ++t) {
    for (int j = 0; j < dim; ++j) {
      const double freq = std::pow(10000.0, -2.0 * (j / 2) / dim);
      const double angle = t * freq;
      pe(t, j) = static_cast<Scalar>(j % 2 == 0 ? std::sin(angle)
                                                : std::cos(angle));
    }
  }
  return pe;
}

// Multi-head self-attention over row-per-position activations.
template <typename Scalar>
ad::Var<Scalar> multihead_attention(ad::Var<Scalar> h, ad::Var<Scalar> wq,
                                    ad::Var<Scalar> wk, ad::Var<Scalar> wv,
                                    ad::Var<Scalar> wo, int heads,
                                    bool causal) {
  const Eigen::Index d = h.value().cols();
  const Eigen::Index hd = head_dim(static_cast<int>(d), heads);
  auto q = ad::matmul(h, wq);
  auto k = ad::matmul(h, wk);
  auto v = ad::matmul(h, wv);
  const Scalar inv_sqrt = Scalar(1) / std::sqrt(static_cast<Scalar>(hd));
  std::vector<ad::Var<Scalar>> outs;
  for (int i = 0; i < heads; ++i) {
    auto qi = ad::slice_cols(q, i * hd, hd);
    auto ki = ad::slice_cols(k, i * hd, hd);
    auto vi = ad::slice_cols(v, i * hd, hd);
    auto scores = ad::scale(ad::matmul(qi, ad::transpose(ki)), inv_sqrt);
    auto probs = ad::softmax_rows(scores, causal);
    outs.push_back(ad::matmul(probs, vi));
  }
  return ad::matmul(ad::hstack(outs), wo);
}

}  // namespace sgt
