#pragma once

// Training objectives. The utility loss preserves the frozen model's logit
// distribution; the obfuscation losses control how recoverable the input is
// from its obfuscation. The mutual-information loss is the cross-sampled
// minibatch Monte-Carlo form: each obfuscation is scored under the Gaussian
// component of an independently drawn input, which is what lets the loss see
// information carried between mixture components rather than only component
// spread. All losses average over batch elements and sequence positions.

#include <optional>
#include <string>
#include <vector>

#include "sgt/ad.hpp"
#include "sgt/estimator.hpp"

namespace sgt {

enum class DemoLoss { kOff, kCompEntropy, kCosSim };

inline DemoLoss demo_loss_from_name(const std::string& name) {
  if (name == "off") return DemoLoss::kOff;
  if (name == "comp_entropy") return DemoLoss::kCompEntropy;
  if (name == "cossim") return DemoLoss::kCosSim;
  throw std::invalid_argument("unknown demonstrative loss '" + name + "'");
}

inline const char* demo_loss_name(DemoLoss d) {
  switch (d) {
    case DemoLoss::kOff: return "off";
    case DemoLoss::kCompEntropy: return "comp_entropy";
    case DemoLoss::kCosSim: return "cossim";
  }
  return "off";
}

struct LossConfig {
  float alpha_mi = 1.0f;      // weight of the mutual-information loss
  float alpha_abscos = 1.0f;  // weight of the absolute-cosine loss
  float alpha_norm = 0.1f;    // weight of the median-norm penalty
  DemoLoss demo = DemoLoss::kOff;
  float demo_weight = 1.0f;
  bool mi_double_sum = false;  // full BxB pairing instead of elementwise
  // Fraction of total steps over which alpha_mi ramps linearly from 0.
  float mi_warmup_fraction = 0.1f;

  float mi_weight_at(int step, int total_steps) const {
    const float warm = mi_warmup_fraction * static_cast<float>(total_steps);
    if (warm <= 0 || step >= warm) return alpha_mi;
    return alpha_mi * static_cast<float>(step + 1) / warm;
  }
};

struct LossBreakdown {
  double total = 0.0;
  double utility = 0.0;
  double mi = 0.0;
  double abscos = 0.0;
  double norm_penalty = 0.0;
  double demonstrative = 0.0;
};

// One batch pushed through the transform on a tape: per-sequence variables
// plus row-stacked views (B*T rows, row = one token position).
template <typename Scalar>
struct SgtBatchForward {
  Mat<Scalar> clean;  // stacked, constant
  ad::Var<Scalar> mu, log_sigma, sigma;
  ad::Var<Scalar> xtilde;  // valid only when noise was supplied
  std::vector<ad::Var<Scalar>> mu_seqs, log_sigma_seqs, sigma_seqs,
      xtilde_seqs;
  std::vector<Mat<Scalar>> clean_seqs;
  int batch = 0;
  Eigen::Index seq_len = 0;
};

// Forward B sequences through the estimator. When `noises` is nonempty it
// must match `cleans` in shape; obfuscations are then formed by the affine
// reparameterization so gradients flow through mu and sigma.
template <typename Scalar>
SgtBatchForward<Scalar> sgt_forward_batch(
    ad::Tape<Scalar>& tape, const SgtEstimator<Scalar>& e,
    const SgtEstimatorVars<Scalar>& vars,
    const std::vector<Mat<Scalar>>& cleans,
    const std::vector<Mat<Scalar>>& noises = {}) {
  if (cleans.empty()) throw std::invalid_argument("sgt_forward_batch: empty");
  const bool sample = !noises.empty();
  if (sample && noises.size() != cleans.size())
    throw std::invalid_argument("sgt_forward_batch: noise count mismatch");
  SgtBatchForward<Scalar> out;
  out.batch = static_cast<int>(cleans.size());
  out.seq_len = cleans[0].rows();
  for (size_t i = 0; i < cleans.size(); ++i) {
    if (cleans[i].rows() != out.seq_len)
      throw std::invalid_argument("sgt_forward_batch: ragged batch");
    auto x = tape.constant(cleans[i]);
    auto f = estimate_field_ad(tape, e, vars, x);
    out.mu_seqs.push_back(f.mu);
    out.log_sigma_seqs.push_back(f.log_sigma);
    out.sigma_seqs.push_back(f.sigma);
    out.clean_seqs.push_back(cleans[i]);
    if (sample) {
      auto noise = tape.constant(noises[i]);
      out.xtilde_seqs.push_back(
          ad::add(x, ad::add(f.mu, ad::mul(f.sigma, noise))));
    }
  }
  out.mu = ad::vstack(out.mu_seqs);
  out.log_sigma = ad::vstack(out.log_sigma_seqs);
  out.sigma = ad::vstack(out.sigma_seqs);
  if (sample) out.xtilde = ad::vstack(out.xtilde_seqs);
  out.clean = Mat<Scalar>(out.batch * out.seq_len, cleans[0].cols());
  for (int i = 0; i < out.batch; ++i)
    out.clean.middleRows(i * out.seq_len, out.seq_len) = cleans[i];
  return out;
}

// ---------------------------------------------------------------------------
// Utility loss
// ---------------------------------------------------------------------------

// Mean over positions of CE(softmax(z_clean) || softmax(z_obf)). The clean
// distribution is a constant target: no gradient reaches the clean branch.
template <typename Scalar>
ad::Var<Scalar> utility_loss(const Mat<Scalar>& clean_logits,
                             ad::Var<Scalar> obf_logits) {
  const Eigen::Index rows = clean_logits.rows();
  Mat<Scalar> probs(rows, clean_logits.cols());
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double m = clean_logits.row(i).template cast<double>().maxCoeff();
    Eigen::RowVectorXd p =
        (clean_logits.row(i).template cast<double>().array() - m).exp();
    probs.row(i) = (p / p.sum()).template cast<Scalar>();
  }
  return ad::xent_vs_probs(obf_logits, probs);
}

// ---------------------------------------------------------------------------
// Mutual-information loss (cross-sampled Monte Carlo, constants dropped)
// ---------------------------------------------------------------------------

namespace detail_loss {

// Per-pair term for row-aligned blocks:
//   sum_j [ 2 (log sigma'_j - log sigma_j) + ((xt - x' - mu')_j / sigma'_j)^2 ]
template <typename Scalar>
ad::Var<Scalar> mi_pair_sum(ad::Tape<Scalar>& tape, ad::Var<Scalar> xtilde,
                            ad::Var<Scalar> own_log_sigma,
                            const Mat<Scalar>& cross_clean,
                            ad::Var<Scalar> cross_mu,
                            ad::Var<Scalar> cross_log_sigma,
                            ad::Var<Scalar> cross_sigma) {
  auto logdet = ad::scale(
      ad::sum_all(ad::sub(cross_log_sigma, own_log_sigma)), Scalar(2));
  auto diff =
      ad::sub(ad::sub(xtilde, tape.constant(cross_clean)), cross_mu);
  auto maha = ad::sum_all(ad::square(ad::div(diff, cross_sigma)));
  return ad::add(logdet, maha);
}

}  // namespace detail_loss

// Minimization target built from scoring each obfuscation under the Gaussian
// of an independently sampled input. Elementwise pairing scores obfuscation
// i against cross element i; the double-sum variant scores every (i, l')
// pair and normalizes by B^2.
template <typename Scalar>
ad::Var<Scalar> mi_loss(ad::Tape<Scalar>& tape,
                        const SgtBatchForward<Scalar>& own,
                        const SgtBatchForward<Scalar>& cross,
                        bool double_sum = false) {
  if (own.batch != cross.batch || own.seq_len != cross.seq_len)
    throw std::invalid_argument("mi_loss: batch size mismatch");
  if (!own.xtilde.valid())
    throw std::invalid_argument("mi_loss: own batch carries no obfuscations");
  if ((own.sigma.value().array() <= Scalar(0)).any() ||
      (cross.sigma.value().array() <= Scalar(0)).any())
    throw std::invalid_argument("mi_loss: nonpositive sigma");
  const Scalar rows = static_cast<Scalar>(own.batch * own.seq_len);
  if (!double_sum) {
    auto pair = detail_loss::mi_pair_sum(tape, own.xtilde, own.log_sigma,
                                         cross.clean, cross.mu,
                                         cross.log_sigma, cross.sigma);
    return ad::scale(pair, Scalar(1) / rows);
  }
  std::optional<ad::Var<Scalar>> acc;
  for (int i = 0; i < own.batch; ++i) {
    for (int l = 0; l < cross.batch; ++l) {
      auto pair = detail_loss::mi_pair_sum(
          tape, own.xtilde_seqs[i], own.log_sigma_seqs[i],
          cross.clean_seqs[l], cross.mu_seqs[l], cross.log_sigma_seqs[l],
          cross.sigma_seqs[l]);
      acc = acc ? ad::add(*acc, pair) : pair;
    }
  }
  return ad::scale(*acc, Scalar(1) / (rows * static_cast<Scalar>(cross.batch)));
}

// ---------------------------------------------------------------------------
// Geometric auxiliaries
// ---------------------------------------------------------------------------

namespace detail_loss {

template <typename Scalar>
ad::Var<Scalar> rowwise_cosine(ad::Tape<Scalar>& tape,
                               const Mat<Scalar>& clean,
                               ad::Var<Scalar> xtilde) {
  Eigen::Vector<Scalar, Eigen::Dynamic> clean_norms =
      clean.rowwise().norm();
  if ((clean_norms.array() <= Scalar(0)).any())
    throw std::invalid_argument("cosine loss: zero-norm clean embedding");
  auto dot = ad::rowwise_sum(ad::mul(tape.constant(clean), xtilde));
  auto xt_norm =
      ad::sqrt(ad::rowwise_sum(ad::square(xtilde)));
  // Flooring the obfuscation norm makes an exactly-zero row contribute 0.
  auto denom = ad::mul(tape.constant(Mat<Scalar>(clean_norms)),
                       ad::clamp_min(xt_norm, Scalar(1e-30)));
  return ad::div(dot, denom);
}

}  // namespace detail_loss

// Mean |cos(x_t, x~_t)|; minimized at orthogonality.
template <typename Scalar>
ad::Var<Scalar> abscos_loss(ad::Tape<Scalar>& tape, const Mat<Scalar>& clean,
                            ad::Var<Scalar> xtilde) {
  return ad::mean_all(
      ad::abs(detail_loss::rowwise_cosine(tape, clean, xtilde)));
}

// Mean signed cos(x_t, x~_t); minimized at antipodality.
template <typename Scalar>
ad::Var<Scalar> cossim_loss(ad::Tape<Scalar>& tape, const Mat<Scalar>& clean,
                            ad::Var<Scalar> xtilde) {
  return ad::mean_all(detail_loss::rowwise_cosine(tape, clean, xtilde));
}

// Mean | ||x_t + mu_t|| - target |, anchoring shifted embeddings to the
// median embedding norm.
template <typename Scalar>
ad::Var<Scalar> median_norm_penalty(ad::Tape<Scalar>& tape,
                                    const Mat<Scalar>& clean,
                                    ad::Var<Scalar> mu, Scalar norm_target) {
  if (!(norm_target > Scalar(0)))
    throw std::invalid_argument("median_norm_penalty: target must be > 0");
  auto shifted = ad::add(tape.constant(clean), mu);
  auto norms = ad::sqrt(ad::rowwise_sum(ad::square(shifted)));
  return ad::mean_all(ad::abs(ad::add_scalar(norms, -norm_target)));
}

// Mean over positions of -log|Sigma_t| = -2 sum_j log sigma_tj. Rewards
// component spread only; kept as a demonstrative foil.
template <typename Scalar>
ad::Var<Scalar> comp_entropy_loss(ad::Var<Scalar> log_sigma) {
  const Scalar rows = static_cast<Scalar>(log_sigma.value().rows());
  return ad::scale(ad::sum_all(log_sigma), Scalar(-2) / rows);
}

// ---------------------------------------------------------------------------
// Combination
// ---------------------------------------------------------------------------

template <typename Scalar>
struct LossTerms {
  ad::Var<Scalar> utility;
  ad::Var<Scalar> mi;
  ad::Var<Scalar> abscos;
  ad::Var<Scalar> norm_penalty;
  ad::Var<Scalar> demonstrative;
};

// total = utility + a1 mi + a2 abscos + a3 norm (+ demo when selected).
// `mi_weight` is the possibly warmed-up alpha_1 for this step.
template <typename Scalar>
std::pair<ad::Var<Scalar>, LossBreakdown> total_loss(
    const LossConfig& cfg, const LossTerms<Scalar>& terms,
    float mi_weight) {
  LossBreakdown b;
  std::optional<ad::Var<Scalar>> total;
  auto accumulate = [&](ad::Var<Scalar> v, Scalar w, double* slot) {
    if (!v.valid()) return;
    *slot = static_cast<double>(v.scalar());
    if (w == Scalar(0)) return;
    auto term = w == Scalar(1) ? v : ad::scale(v, w);
    total = total ? ad::add(*total, term) : term;
  };
  accumulate(terms.utility, Scalar(1), &b.utility);
  accumulate(terms.mi, static_cast<Scalar>(mi_weight), &b.mi);
  accumulate(terms.abscos, static_cast<Scalar>(cfg.alpha_abscos), &b.abscos);
  accumulate(terms.norm_penalty, static_cast<Scalar>(cfg.alpha_norm),
             &b.norm_penalty);
  if (cfg.demo != DemoLoss::kOff)
    accumulate(terms.demonstrative, static_cast<Scalar>(cfg.demo_weight),
               &b.demonstrative);
  if (!total) throw std::invalid_argument("total_loss: no active terms");
  b.total = static_cast<double>(total->scalar());
  return {*total, b};
}

// ---------------------------------------------------------------------------
// Minibatch mixture-entropy estimators (metrics; no gradients)
// ---------------------------------------------------------------------------

enum class EntropyPairing {
  // Score obfuscation i under cross element i only: the per-pair Monte-Carlo
  // term that the training loss uses. Upper-biased for spread-out mixtures.
  kElementwise,
  // Score obfuscation i under the equal-weight mixture of the whole cross
  // batch (log of the mean density): the plug-in estimate that converges to
  // the true mixture entropy and is used for reported metrics.
  kBatchMixture,
};

inline double minibatch_mixture_entropy(
    const std::vector<MatF>& xtilde, const std::vector<MatF>& cross_clean,
    const std::vector<GaussianField>& cross_fields, EntropyPairing pairing) {
  if (cross_clean.size() != cross_fields.size() || cross_clean.empty())
    throw std::invalid_argument("mixture entropy: bad cross batch");
  if (pairing == EntropyPairing::kElementwise &&
      xtilde.size() != cross_clean.size())
    throw std::invalid_argument("mixture entropy: batch size mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < xtilde.size(); ++i) {
    if (pairing == EntropyPairing::kElementwise) {
      acc += -conditional_log_density(xtilde[i], cross_clean[i],
                                      cross_fields[i]);
      continue;
    }
    double max_logp = -std::numeric_limits<double>::infinity();
    std::vector<double> logps(cross_clean.size());
    for (size_t l = 0; l < cross_clean.size(); ++l) {
      logps[l] =
          conditional_log_density(xtilde[i], cross_clean[l], cross_fields[l]);
      max_logp = std::max(max_logp, logps[l]);
    }
    double sum = 0.0;
    for (double lp : logps) sum += std::exp(lp - max_logp);
    acc += -(max_logp + std::log(sum / cross_clean.size()));
  }
  return acc / static_cast<double>(xtilde.size());
}

}  // namespace sgt
