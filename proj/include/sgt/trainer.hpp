#pragma once

// Training loop and evaluator. The target model is frozen throughout (its
// parameter hash is asserted unchanged); only the transform estimator
// learns. Each step consumes two batches from samplers on distinct stream
// ids: one for utility and obfuscation, one for cross-sampling the
// mutual-information loss.

#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "sgt/baseline.hpp"
#include "sgt/dataset.hpp"
#include "sgt/estimator.hpp"
#include "sgt/lm.hpp"
#include "sgt/losses.hpp"
#include "sgt/optim.hpp"
#include "sgt/privacy.hpp"
#include "sgt/report.hpp"

namespace sgt {

struct TrainConfig {
  int steps = 2000;
  int batch_size = 8;  // >= 2: the mi loss needs a genuine second batch
  LrSchedule lr{3e-4f, 0.05f, true};
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double clip_norm = 1.0;
  LossConfig loss;
  SgtEstimatorConfig estimator;  // dim/context overridden from target/data
  int eval_cadence = 200;
  int probe_tokens = 512;
  uint64_t seed = 0;
  int chunk_len = 0;  // sequence length for training data; 0 = target context

  void validate() const {
    if (steps <= 0) throw std::invalid_argument("train: steps must be > 0");
    if (batch_size < 2)
      throw std::invalid_argument(
          "train: batch size must be >= 2 (mi loss needs a second batch)");
    if (!(lr.base_rate > 0))
      throw std::invalid_argument("train: learning rate must be > 0");
  }
};

struct UtilityMetrics {
  double top1_agreement = 0.0;  // percent
  double ce_gap = 0.0;          // nats
  int64_t tokens = 0;
};

struct StepLog {
  int step = 0;
  LossBreakdown loss;
  double lr = 0.0;
  double grad_norm = 0.0;
};

struct ProbeLog {
  int step = 0;
  double top1_agreement = 0.0;
  double nn_fr = 0.0;
};

struct TrainResult {
  SgtEstimator<float> estimator;
  std::vector<StepLog> steps;
  std::vector<ProbeLog> probes;
  std::string target_hash_before, target_hash_after;
  float median_norm = 0.0f;
  bool aborted_nan = false;
  int abort_step = -1;
};

inline std::string step_log_csv(const std::vector<StepLog>& rows) {
  std::ostringstream out;
  out.precision(9);
  out << "step,total,utility,mi,abscos,norm,demonstrative,lr,grad_norm\n";
  for (const auto& r : rows)
    out << r.step << ',' << r.loss.total << ',' << r.loss.utility << ','
        << r.loss.mi << ',' << r.loss.abscos << ',' << r.loss.norm_penalty
        << ',' << r.loss.demonstrative << ',' << r.lr << ',' << r.grad_norm
        << "\n";
  return out.str();
}

inline std::string probe_log_csv(const std::vector<ProbeLog>& rows) {
  std::ostringstream out;
  out.precision(9);
  out << "step,top1_agreement,nn_fr\n";
  for (const auto& r : rows)
    out << r.step << ',' << r.top1_agreement << ',' << r.nn_fr << "\n";
  return out.str();
}

namespace detail_train {

inline std::vector<MatF> embed_batch(TargetModel<float>& target,
                                     const std::vector<std::vector<int>>& ids,
                                     bool drop_last) {
  std::vector<MatF> out;
  out.reserve(ids.size());
  for (const auto& seq : ids) {
    std::vector<int> use = seq;
    if (drop_last) use.pop_back();  // inputs for next-token prediction
    out.push_back(embed(target, use));
  }
  return out;
}

}  // namespace detail_train

// Trains a transform estimator against a frozen target model. On NaN loss
// the run aborts and returns the parameters from the last probe snapshot.
inline TrainResult train_sgt(TargetModel<float>& target, const Dataset& data,
                             const TrainConfig& cfg_in) {
  TrainConfig cfg = cfg_in;
  cfg.validate();
  if (data.chunk_len > target.config.context)
    throw std::invalid_argument("train: dataset chunks exceed model context");

  TrainResult result;
  result.target_hash_before = parameter_hash(target);

  auto table = EmbeddingTable<float>::from_matrix(target.embedding.value);
  result.median_norm = table.median_norm;

  cfg.estimator.dim = target.config.dim;
  cfg.estimator.context = data.chunk_len;
  RngStream root(cfg.seed, 0);
  RngStream init_rng = root.child(1);
  result.estimator = SgtEstimator<float>::init(cfg.estimator,
                                               table.median_norm, init_rng);
  SgtEstimator<float>& est = result.estimator;

  const auto pool = data.train_chunk_ids();
  BatchSampler sampler_a(data, pool, cfg.batch_size, root.child(2));
  BatchSampler sampler_b(data, pool, cfg.batch_size, root.child(3));
  if (sampler_a.stream_id() == sampler_b.stream_id())
    throw std::logic_error("train: mi batches must use distinct stream ids");
  RngStream noise_rng = root.child(4);
  RngStream probe_rng = root.child(5);

  // Fixed probe set so curves are comparable across runs and loss configs.
  const auto probe_batch = [&] {
    BatchSampler s(data, pool, std::max(1, cfg.probe_tokens / data.chunk_len),
                   probe_rng.child(0));
    return s.next_batch();
  }();

  Optimizer<float> optim(est.params(), cfg.optimizer);
  std::vector<MatF> last_good;
  for (auto* p : est.params()) last_good.push_back(p->value);

  auto run_probe = [&](int step) {
    std::vector<MatF> cleans = detail_train::embed_batch(target, probe_batch,
                                                         /*drop_last=*/false);
    RngStream probe_noise = probe_rng.child(100 + step);
    int64_t agree = 0, tokens = 0, fails = 0;
    for (size_t i = 0; i < cleans.size(); ++i) {
      auto obf = sample_sgt(est, cleans[i], probe_noise);
      MatF zc = forward(target, cleans[i]);
      MatF zo = forward(target, obf.obfuscated);
      for (Eigen::Index t = 0; t < zc.rows(); ++t) {
        if (probe_batch[i][t] == data.pad_id) continue;
        Eigen::Index ac, ao;
        zc.row(t).maxCoeff(&ac);
        zo.row(t).maxCoeff(&ao);
        agree += (ac == ao);
        fails += (nn_attack(obf.obfuscated.row(t), table.vectors) !=
                  probe_batch[i][t]);
        ++tokens;
      }
    }
    result.probes.push_back({step, 100.0 * agree / std::max<int64_t>(1, tokens),
                             100.0 * fails / std::max<int64_t>(1, tokens)});
  };

  for (int step = 0; step < cfg.steps; ++step) {
    const auto ids_a = sampler_a.next_batch();
    const auto ids_b = sampler_b.next_batch();
    std::vector<MatF> cleans =
        detail_train::embed_batch(target, ids_a, /*drop_last=*/false);
    std::vector<MatF> cross =
        detail_train::embed_batch(target, ids_b, /*drop_last=*/false);
    std::vector<MatF> noises;
    for (const auto& c : cleans)
      noises.push_back(gaussian_draw<float>(noise_rng, c.rows(), c.cols()));

    // Constant utility target from the clean branch.
    MatF clean_logits(static_cast<Eigen::Index>(cleans.size()) * data.chunk_len,
                      target.config.vocab_size);
    for (size_t i = 0; i < cleans.size(); ++i)
      clean_logits.middleRows(i * data.chunk_len, data.chunk_len) =
          forward(target, cleans[i]);

    ad::Tape<float> tape;
    auto est_vars = bind(tape, est, /*trainable=*/true);
    auto own = sgt_forward_batch(tape, est, est_vars, cleans, noises);
    auto crs = sgt_forward_batch(tape, est, est_vars, cross);
    auto lm_vars = bind(tape, target, /*trainable=*/false);
    std::vector<ad::Var<float>> logits;
    for (auto& xt : own.xtilde_seqs)
      logits.push_back(forward_from_embeddings(tape, target, lm_vars, xt));

    LossTerms<float> terms;
    terms.utility = utility_loss<float>(clean_logits, ad::vstack(logits));
    terms.mi = mi_loss(tape, own, crs, cfg.loss.mi_double_sum);
    terms.abscos = abscos_loss(tape, own.clean, own.xtilde);
    terms.norm_penalty =
        median_norm_penalty<float>(tape, own.clean, own.mu, table.median_norm);
    if (cfg.loss.demo == DemoLoss::kCompEntropy)
      terms.demonstrative = comp_entropy_loss(own.log_sigma);
    else if (cfg.loss.demo == DemoLoss::kCosSim)
      terms.demonstrative = cossim_loss(tape, own.clean, own.xtilde);

    const float mi_w = cfg.loss.mi_weight_at(step, cfg.steps);
    auto [total, breakdown] = total_loss(cfg.loss, terms, mi_w);

    if (!std::isfinite(breakdown.total)) {
      for (size_t i = 0; i < last_good.size(); ++i)
        est.params()[i]->value = last_good[i];
      result.aborted_nan = true;
      result.abort_step = step;
      break;
    }

    optim.zero_grad();
    tape.backward(total);
    const double grad_norm = clip_global_norm(est.params(), cfg.clip_norm);
    const float lr = cfg.lr.at(step, cfg.steps);
    optim.step(lr);
    result.steps.push_back({step, breakdown, lr, grad_norm});

    if (step % cfg.eval_cadence == 0 || step + 1 == cfg.steps) {
      run_probe(step);
      last_good.clear();
      for (auto* p : est.params()) last_good.push_back(p->value);
    }
  }

  result.target_hash_after = parameter_hash(target);
  if (result.target_hash_after != result.target_hash_before)
    throw std::logic_error("train: frozen target parameters changed");
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation (shared by the transform, the constant-noise baseline, and the
// passthrough control)
// ---------------------------------------------------------------------------

// A mechanism is anything that yields a Gaussian field for a clean sequence;
// obfuscations are always drawn by the same affine reparameterization.
struct Mechanism {
  std::string name;
  std::function<GaussianField(const MatF&)> field;
};

inline Mechanism sgt_mechanism(SgtEstimator<float>& est) {
  return {"sgt", [&est](const MatF& x) { return estimate_field(est, x); }};
}

inline Mechanism constant_noise_mechanism(float sigma) {
  const float floor_sigma = std::max(sigma, 1e-8f);
  return {"gaussian", [floor_sigma](const MatF& x) {
            GaussianField f;
            f.mu = MatF::Zero(x.rows(), x.cols());
            f.sigma = MatF::Constant(x.rows(), x.cols(), floor_sigma);
            return f;
          }};
}

inline Mechanism passthrough_mechanism() { return constant_noise_mechanism(0.0f); }

struct EvalOptions {
  int64_t hist_tokens = 10000;   // token budget for ranks and attacks
  int64_t mi_samples = 100000;   // obfuscation draws for the mi estimate
  int mi_cross = 1024;           // cross components for the marginal mixture
  int64_t utility_tokens = 2048;
  std::vector<int> ttr_ks = {1, 5, 10, 50, 100};
  int64_t pac_n = 0;  // 0 = use the vocabulary size
  uint64_t seed = 0;
  int mi_min_samples = 1000;
};

struct EvalResult {
  UtilityMetrics utility;
  PrivacyReport report;
  RankHistogram histogram;
};

inline EvalResult evaluate(TargetModel<float>& target,
                           const Mechanism& mechanism, const Dataset& data,
                           const std::vector<int>& pool,
                           const EvalOptions& opt) {
  if (pool.empty()) throw std::invalid_argument("evaluate: empty pool");
  auto table = EmbeddingTable<float>::from_matrix(target.embedding.value);
  const int vocab = target.config.vocab_size;
  RngStream root(opt.seed, 9000);
  BatchSampler sampler(data, pool, 1, root.child(1));
  RngStream noise_rng = root.child(2);

  EvalResult res;
  res.histogram = RankHistogram(vocab);
  std::vector<Eigen::RowVectorXf> xt_rows;
  std::vector<int> truths;

  // Rank + attack token collection.
  while (res.histogram.total < opt.hist_tokens) {
    const auto seq = sampler.next_batch()[0];
    const MatF clean = embed(target, seq);
    GaussianField f = mechanism.field(clean);
    MatF noise = gaussian_draw<float>(noise_rng, clean.rows(), clean.cols());
    MatF xt = clean + f.mu + f.sigma.cwiseProduct(noise);
    for (Eigen::Index t = 0; t < xt.rows(); ++t) {
      if (seq[t] == data.pad_id) continue;
      if (res.histogram.total >= opt.hist_tokens) break;
      res.histogram.add(reconstruction_rank(xt.row(t), table.vectors, seq[t]));
      xt_rows.push_back(xt.row(t));
      truths.push_back(seq[t]);
    }
  }
  auto nn = run_attack(xt_rows, truths, table.vectors, false, 0);
  const int mrp_r = calibrate_mrp(res.histogram);
  auto mrp = run_attack(xt_rows, truths, table.vectors, true, mrp_r);

  // Utility on the same split with fresh draws.
  BatchSampler usampler(data, pool, 1, root.child(3));
  RngStream unoise = root.child(4);
  int64_t agree = 0, tokens = 0;
  double ce_obf = 0.0, ce_clean = 0.0;
  while (tokens < opt.utility_tokens) {
    const auto seq = usampler.next_batch()[0];
    const std::vector<int> inputs(seq.begin(), seq.end() - 1);
    const MatF clean = embed(target, inputs);
    GaussianField f = mechanism.field(clean);
    MatF noise = gaussian_draw<float>(unoise, clean.rows(), clean.cols());
    MatF xt = clean + f.mu + f.sigma.cwiseProduct(noise);
    MatF zc = forward(target, clean);
    MatF zo = forward(target, xt);
    for (Eigen::Index t = 0; t < zc.rows(); ++t) {
      const int target_id = seq[t + 1];
      if (target_id == data.pad_id) continue;
      Eigen::Index ac, ao;
      zc.row(t).maxCoeff(&ac);
      zo.row(t).maxCoeff(&ao);
      agree += (ac == ao);
      auto row_ce = [&](const MatF& z) {
        const float mx = z.row(t).maxCoeff();
        const double lse =
            std::log((z.row(t).array() - mx).exp().cast<double>().sum()) + mx;
        return lse - static_cast<double>(z(t, target_id));
      };
      ce_clean += row_ce(zc);
      ce_obf += row_ce(zo);
      ++tokens;
    }
  }
  res.utility.tokens = tokens;
  res.utility.top1_agreement = 100.0 * agree / std::max<int64_t>(1, tokens);
  res.utility.ce_gap = (ce_obf - ce_clean) / std::max<int64_t>(1, tokens);

  // Feature-level mutual information: draws plus an independent cross batch.
  const int d = target.config.dim;
  MatD mi_xt(opt.mi_samples, d), mi_sigma(opt.mi_samples, d);
  BatchSampler msampler(data, pool, 1, root.child(5));
  RngStream mnoise = root.child(6);
  Eigen::Index filled = 0;
  while (filled < opt.mi_samples) {
    const auto seq = msampler.next_batch()[0];
    const MatF clean = embed(target, seq);
    GaussianField f = mechanism.field(clean);
    MatF noise = gaussian_draw<float>(mnoise, clean.rows(), clean.cols());
    MatF xt = clean + f.mu + f.sigma.cwiseProduct(noise);
    for (Eigen::Index t = 0; t < xt.rows() && filled < opt.mi_samples; ++t) {
      if (seq[t] == data.pad_id) continue;
      mi_xt.row(filled) = xt.row(t).cast<double>();
      mi_sigma.row(filled) = f.sigma.row(t).cast<double>();
      ++filled;
    }
  }
  MatD cross_mean(opt.mi_cross, d), cross_sigma(opt.mi_cross, d);
  BatchSampler csampler(data, pool, 1, root.child(7));
  Eigen::Index cfilled = 0;
  while (cfilled < opt.mi_cross) {
    const auto seq = csampler.next_batch()[0];
    const MatF clean = embed(target, seq);
    GaussianField f = mechanism.field(clean);
    for (Eigen::Index t = 0; t < clean.rows() && cfilled < opt.mi_cross; ++t) {
      if (seq[t] == data.pad_id) continue;
      cross_mean.row(cfilled) = (clean.row(t) + f.mu.row(t)).cast<double>();
      cross_sigma.row(cfilled) = f.sigma.row(t).cast<double>();
      ++cfilled;
    }
  }
  auto mi = feature_mi(mi_xt, mi_sigma, cross_mean, cross_sigma,
                       opt.mi_min_samples);

  PrivacyReport& rep = res.report;
  rep.nn_fr = nn.failure_rate_percent;
  rep.mrp_fr = mrp.failure_rate_percent;
  rep.mrp_r = mrp_r;
  for (int k : opt.ttr_ks) {
    if (k >= vocab) continue;
    rep.ttr[k] = ttr_k(res.histogram, k);
    if (2 * k < vocab) rep.sym_ttr[k] = sym_ttr_k(res.histogram, k);
  }
  rep.hist_entropy = hist_entropy_percent(res.histogram);
  rep.mi_mean = mi.mean_nats;
  rep.mi_sum = mi.sum_nats;
  rep.pac_n = opt.pac_n > 0 ? opt.pac_n : vocab;
  rep.pac_adv = pac_adv(std::max(0.0, mi.mean_nats), rep.pac_n);
  rep.hist_tokens = res.histogram.total;
  rep.mi_samples = opt.mi_samples;
  rep.mechanism = mechanism.name;
  rep.target_hash = parameter_hash(target);
  rep.dataset_sha256 = data.sha256;
  rep.seed = opt.seed;
  return res;
}

// Constant-noise sweep over sigma values; epsilon from the classical
// calibration with the table's replace-one sensitivity.
inline std::vector<SweepRow> dp_sweep(TargetModel<float>& target,
                                      const Dataset& data,
                                      const std::vector<int>& pool,
                                      const std::vector<double>& sigmas,
                                      double dp_delta, const EvalOptions& opt) {
  const double delta2 = l2_sensitivity(target.embedding.value);
  std::vector<SweepRow> rows;
  for (double sigma : sigmas) {
    Mechanism mech = sigma == 0.0 ? passthrough_mechanism()
                                  : constant_noise_mechanism(
                                        static_cast<float>(sigma));
    EvalResult r = evaluate(target, mech, data, pool, opt);
    SweepRow row;
    row.sigma = sigma;
    row.epsilon = epsilon_of(sigma, delta2, dp_delta);
    row.utility_agreement = r.utility.top1_agreement;
    row.utility_ce_gap = r.utility.ce_gap;
    row.nn_fr = r.report.nn_fr;
    if (row.epsilon > 1.0)
      row.note = "epsilon above small-epsilon validity regime of the "
                 "classical gaussian calibration";
    rows.push_back(row);
  }
  return rows;
}

}  // namespace sgt
