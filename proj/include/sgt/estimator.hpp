#pragma once

// The stained-glass transform: a sequence-dependent Gaussian field over an
// embedding sequence. A one-layer transformer trunk (bidirectional by
// default, causal as a config switch) feeds a mean head and a clamped
// log-scale head; obfuscations are drawn as
//
//   x~ = x + mu(x_{1:T}) + sigma(x_{1:T}) .* u,   u ~ N(0, I)
//
// with the standard-normal draw stored so gradients flow through mu and
// sigma (never sampled from the shifted Gaussian directly).

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sgt/ad.hpp"
#include "sgt/attention.hpp"
#include "sgt/checkpoint.hpp"
#include "sgt/hash.hpp"
#include "sgt/rng.hpp"

namespace sgt {

struct SgtEstimatorConfig {
  int dim = 64;
  int heads = 2;
  int hidden_mult = 4;
  int context = 64;
  bool causal = false;
  float log_sigma_min = -9.2103404f;  // log 1e-4
  float log_sigma_max = 2.3025851f;   // log 1e+1
  // Initial noise scale as a fraction of median embedding norm per
  // coordinate: sigma0 = sigma_init_frac * median_norm / sqrt(dim).
  float sigma_init_frac = 0.05f;
  float trunk_init_std = 0.08f;
};

template <typename Scalar>
struct GaussianFieldT {
  Mat<Scalar> mu;     // T x d
  Mat<Scalar> sigma;  // T x d, strictly positive
};

using GaussianField = GaussianFieldT<float>;

template <typename Scalar>
struct SgtEstimator {
  SgtEstimatorConfig config;
  Parameter<Scalar> wq, wk, wv, wo, w1, w2;  // trunk
  Parameter<Scalar> w_mu, b_mu;              // mean head
  Parameter<Scalar> w_s, b_s;                // log-scale head
  Mat<Scalar> positions;

  // Mean head starts at zero and the log-scale bias at a small fraction of
  // the embedding scale, so the initial transform is near identity.
  static SgtEstimator init(const SgtEstimatorConfig& cfg, Scalar median_norm,
                           RngStream& rng) {
    head_dim(cfg.dim, cfg.heads);
    if (cfg.log_sigma_min >= cfg.log_sigma_max)
      throw std::invalid_argument("sigma clamp bounds are inverted");
    SgtEstimator e;
    e.config = cfg;
    const Scalar std0 = static_cast<Scalar>(cfg.trunk_init_std);
    auto draw = [&](const std::string& name, int r, int c) {
      return Parameter<Scalar>(name, gaussian_draw<Scalar>(rng, r, c) * std0);
    };
    e.wq = draw("wq", cfg.dim, cfg.dim);
    e.wk = draw("wk", cfg.dim, cfg.dim);
    e.wv = draw("wv", cfg.dim, cfg.dim);
    e.wo = draw("wo", cfg.dim, cfg.dim);
    e.w1 = draw("w1", cfg.dim, cfg.hidden_mult * cfg.dim);
    e.w2 = draw("w2", cfg.hidden_mult * cfg.dim, cfg.dim);
    e.w_mu = Parameter<Scalar>("w_mu", Mat<Scalar>::Zero(cfg.dim, cfg.dim));
    e.b_mu = Parameter<Scalar>("b_mu", Mat<Scalar>::Zero(1, cfg.dim));
    e.w_s = Parameter<Scalar>("w_s", Mat<Scalar>::Zero(cfg.dim, cfg.dim));
    const double sigma0 =
        std::max(static_cast<double>(cfg.sigma_init_frac) *
                     static_cast<double>(median_norm) / std::sqrt(cfg.dim),
                 std::exp(static_cast<double>(cfg.log_sigma_min)));
    e.b_s = Parameter<Scalar>(
        "b_s", Mat<Scalar>::Constant(1, cfg.dim,
                                     static_cast<Scalar>(std::log(sigma0))));
    e.positions = sinusoidal_positions<Scalar>(cfg.context, cfg.dim);
    return e;
  }

  std::vector<Parameter<Scalar>*> params() {
    return {&wq, &wk, &wv, &wo, &w1, &w2, &w_mu, &b_mu, &w_s, &b_s};
  }
};

template <typename Scalar>
struct SgtEstimatorVars {
  ad::Var<Scalar> wq, wk, wv, wo, w1, w2, w_mu, b_mu, w_s, b_s;
};

template <typename Scalar>
SgtEstimatorVars<Scalar> bind(ad::Tape<Scalar>& tape, SgtEstimator<Scalar>& e,
                              bool trainable = true) {
  auto wrap = [&](Parameter<Scalar>& p) {
    return trainable ? tape.param(p) : tape.constant(p.value);
  };
  return {wrap(e.wq), wrap(e.wk), wrap(e.wv), wrap(e.wo), wrap(e.w1),
          wrap(e.w2), wrap(e.w_mu), wrap(e.b_mu), wrap(e.w_s), wrap(e.b_s)};
}

template <typename Scalar>
struct FieldVars {
  ad::Var<Scalar> mu;         // T x d
  ad::Var<Scalar> log_sigma;  // T x d, already clamped
  ad::Var<Scalar> sigma;      // exp(log_sigma)
};

template <typename Scalar>
FieldVars<Scalar> estimate_field_ad(ad::Tape<Scalar>& tape,
                                    const SgtEstimator<Scalar>& e,
                                    const SgtEstimatorVars<Scalar>& v,
                                    ad::Var<Scalar> x) {
  if (x.value().cols() != e.config.dim)
    throw std::invalid_argument("estimate_field: embedding dim mismatch");
  if (x.value().rows() > e.config.context)
    throw std::invalid_argument("estimate_field: sequence exceeds context");
  const Eigen::Index T = x.value().rows();
  auto h = ad::add(x, tape.constant(e.positions.topRows(T)));
  auto attn = multihead_attention(ad::rmsnorm_rows(h), v.wq, v.wk, v.wv, v.wo,
                                  e.config.heads, e.config.causal);
  h = ad::add(h, attn);
  auto mlp = ad::matmul(ad::gelu(ad::matmul(ad::rmsnorm_rows(h), v.w1)), v.w2);
  h = ad::add(h, mlp);
  FieldVars<Scalar> f;
  f.mu = ad::add_rowvec(ad::matmul(h, v.w_mu), v.b_mu);
  auto s_raw = ad::add_rowvec(ad::matmul(h, v.w_s), v.b_s);
  f.log_sigma = ad::clamp(s_raw, static_cast<Scalar>(e.config.log_sigma_min),
                          static_cast<Scalar>(e.config.log_sigma_max));
  f.sigma = ad::exp(f.log_sigma);
  return f;
}

template <typename Scalar>
GaussianFieldT<Scalar> estimate_field(SgtEstimator<Scalar>& e,
                                      const Mat<Scalar>& x) {
  check_finite(x, "estimate_field input");
  ad::Tape<Scalar> tape;
  auto vars = bind(tape, e, /*trainable=*/false);
  auto f = estimate_field_ad(tape, e, vars, tape.constant(x));
  return {f.mu.value(), f.sigma.value()};
}

// One obfuscated sequence with its sampling metadata. The identity
// obfuscated == clean + mu + sigma .* noise holds exactly (same expression,
// same evaluation order).
template <typename Scalar>
struct ObfuscationT {
  Mat<Scalar> clean;
  Mat<Scalar> mu;
  Mat<Scalar> sigma;
  Mat<Scalar> noise;  // the standard-normal draw
  Mat<Scalar> obfuscated;
};

using Obfuscation = ObfuscationT<float>;

template <typename Scalar>
ObfuscationT<Scalar> sample_sgt(SgtEstimator<Scalar>& e, const Mat<Scalar>& x,
                                RngStream& stream) {
  ObfuscationT<Scalar> o;
  o.clean = x;
  auto field = estimate_field(e, x);
  o.mu = std::move(field.mu);
  o.sigma = std::move(field.sigma);
  o.noise = gaussian_draw<Scalar>(stream, x.rows(), x.cols());
  o.obfuscated = o.clean + o.mu + o.sigma.cwiseProduct(o.noise);
  return o;
}

// ---------------------------------------------------------------------------
// Conditional density
// ---------------------------------------------------------------------------

// Conditional density family of the transform (the noise law given the
// input). Only the diagonal Gaussian family is implemented; anything else
// would plug in here.
template <typename Scalar>
class DensityFamily {
 public:
  virtual ~DensityFamily() = default;
  virtual const char* name() const = 0;
  // log p(xtilde | x) summed over sequence positions.
  virtual double conditional_log_density(
      const Mat<Scalar>& xtilde, const Mat<Scalar>& x,
      const GaussianFieldT<Scalar>& field) const = 0;
};

template <typename Scalar>
class DiagonalGaussianDensity final : public DensityFamily<Scalar> {
 public:
  const char* name() const override { return "diagonal-gaussian"; }

  double conditional_log_density(
      const Mat<Scalar>& xtilde, const Mat<Scalar>& x,
      const GaussianFieldT<Scalar>& field) const override {
    if (xtilde.rows() != x.rows() || xtilde.cols() != x.cols() ||
        field.mu.rows() != x.rows() || field.mu.cols() != x.cols() ||
        field.sigma.rows() != x.rows() || field.sigma.cols() != x.cols())
      throw std::invalid_argument("conditional_log_density: shape mismatch");
    if ((field.sigma.array() <= Scalar(0)).any())
      throw std::invalid_argument(
          "conditional_log_density: nonpositive sigma");
    const MatD diff = (xtilde - x - field.mu).template cast<double>();
    const MatD sigma = field.sigma.template cast<double>();
    const double d = static_cast<double>(x.cols());
    const double t = static_cast<double>(x.rows());
    double logp = -0.5 * d * t * std::log(2.0 * M_PI);
    logp -= sigma.array().log().sum();
    logp -= 0.5 * (diff.array() / sigma.array()).square().sum();
    return logp;
  }
};

template <typename Scalar>
double conditional_log_density(const Mat<Scalar>& xtilde, const Mat<Scalar>& x,
                               const GaussianFieldT<Scalar>& field) {
  return DiagonalGaussianDensity<Scalar>().conditional_log_density(xtilde, x,
                                                                   field);
}

// ---------------------------------------------------------------------------
// Checkpointing ("SGTS"): estimator parameters plus a frozen copy of the
// target's embedding table, so obfuscation runs without the target model.
// ---------------------------------------------------------------------------

struct SgtBundle {
  SgtEstimator<float> estimator;
  MatF embedding;  // V x d frozen copy
  std::string tokenizer_mode = "byte";
  std::map<std::string, std::string> extra;
};

namespace detail_sgt {

template <typename Scalar>
CheckpointBlock matrix_block(const std::string& name, const Mat<Scalar>& m) {
  CheckpointBlock b;
  b.name = name;
  b.shape = {static_cast<uint32_t>(m.rows()), static_cast<uint32_t>(m.cols())};
  b.data.resize(static_cast<size_t>(m.size()));
  size_t at = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      b.data[at++] = static_cast<float>(m(r, c));
  return b;
}

inline MatF block_matrix(const CheckpointBlock& b) {
  if (b.shape.size() != 2)
    throw std::runtime_error("checkpoint block '" + b.name + "': bad rank");
  MatF m(b.shape[0], b.shape[1]);
  size_t at = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = b.data[at++];
  return m;
}

}  // namespace detail_sgt

inline void save_sgt(const std::string& path, SgtBundle& bundle) {
  Checkpoint ckpt;
  ckpt.magic = "SGTS";
  ckpt.config = bundle.extra;
  const auto& cfg = bundle.estimator.config;
  ckpt.config["dim"] = std::to_string(cfg.dim);
  ckpt.config["heads"] = std::to_string(cfg.heads);
  ckpt.config["hidden_mult"] = std::to_string(cfg.hidden_mult);
  ckpt.config["context"] = std::to_string(cfg.context);
  ckpt.config["causal"] = cfg.causal ? "1" : "0";
  ckpt.config["log_sigma_min"] = std::to_string(cfg.log_sigma_min);
  ckpt.config["log_sigma_max"] = std::to_string(cfg.log_sigma_max);
  ckpt.config["tokenizer_mode"] = bundle.tokenizer_mode;
  for (const auto* p : bundle.estimator.params())
    ckpt.blocks.push_back(detail_sgt::matrix_block(p->name, p->value));
  ckpt.blocks.push_back(detail_sgt::matrix_block("embedding", bundle.embedding));
  save_checkpoint(path, ckpt);
}

inline SgtBundle load_sgt(const std::string& path) {
  const Checkpoint ckpt = load_checkpoint(path, "SGTS");
  SgtBundle bundle;
  SgtEstimatorConfig cfg;
  cfg.dim = std::stoi(ckpt.config_at("dim"));
  cfg.heads = std::stoi(ckpt.config_at("heads"));
  cfg.hidden_mult = std::stoi(ckpt.config_at("hidden_mult"));
  cfg.context = std::stoi(ckpt.config_at("context"));
  cfg.causal = ckpt.config_at("causal") == "1";
  cfg.log_sigma_min = std::stof(ckpt.config_at("log_sigma_min"));
  cfg.log_sigma_max = std::stof(ckpt.config_at("log_sigma_max"));
  bundle.tokenizer_mode = ckpt.config_at("tokenizer_mode");
  bundle.extra = ckpt.config;
  SgtEstimator<float>& e = bundle.estimator;
  e.config = cfg;
  e.positions = sinusoidal_positions<float>(cfg.context, cfg.dim);
  auto load_param = [&](Parameter<float>& p, const std::string& name) {
    p.name = name;
    p.value = detail_sgt::block_matrix(ckpt.block(name));
    p.zero_grad();
  };
  load_param(e.wq, "wq");
  load_param(e.wk, "wk");
  load_param(e.wv, "wv");
  load_param(e.wo, "wo");
  load_param(e.w1, "w1");
  load_param(e.w2, "w2");
  load_param(e.w_mu, "w_mu");
  load_param(e.b_mu, "b_mu");
  load_param(e.w_s, "w_s");
  load_param(e.b_s, "b_s");
  bundle.embedding = detail_sgt::block_matrix(ckpt.block("embedding"));
  return bundle;
}

template <typename Scalar>
std::string parameter_hash(SgtEstimator<Scalar>& e) {
  std::string bytes;
  for (const auto* p : e.params()) {
    const CheckpointBlock b = detail_sgt::matrix_block(p->name, p->value);
    bytes.append(reinterpret_cast<const char*>(b.data.data()),
                 4 * b.data.size());
  }
  return sha256_hex(bytes);
}

}  // namespace sgt
