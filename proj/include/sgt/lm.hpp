#pragma once

// The frozen target model: a small decoder-only transformer over a fixed
// embedding table. Pre-norm blocks with causal multi-head attention, gelu
// MLP, no biases, fixed sinusoidal positions, and logits tied to the
// embedding table (output projection = table transpose).

#include <cmath>
#include <string>
#include <vector>

#include "sgt/ad.hpp"
#include "sgt/attention.hpp"
#include "sgt/checkpoint.hpp"
#include "sgt/dataset.hpp"
#include "sgt/hash.hpp"
#include "sgt/optim.hpp"
#include "sgt/rng.hpp"

namespace sgt {

struct TargetModelConfig {
  int vocab_size = 256;
  int dim = 64;
  int heads = 4;
  int layers = 2;
  int context = 64;
  std::string tokenizer_mode = "byte";
};

template <typename Scalar>
struct TargetModel {
  TargetModelConfig config;
  Parameter<Scalar> embedding;  // V x d
  struct Layer {
    Parameter<Scalar> wq, wk, wv, wo, w1, w2;
  };
  std::vector<Layer> layers;
  Mat<Scalar> positions;  // context x d, not trainable

  static TargetModel init(const TargetModelConfig& cfg, RngStream& rng) {
    head_dim(cfg.dim, cfg.heads);
    TargetModel m;
    m.config = cfg;
    const Scalar std0 = Scalar(0.08);
    auto draw = [&](const std::string& name, int r, int c) {
      return Parameter<Scalar>(name,
                               gaussian_draw<Scalar>(rng, r, c) * std0);
    };
    m.embedding = draw("embedding", cfg.vocab_size, cfg.dim);
    for (int l = 0; l < cfg.layers; ++l) {
      const std::string p = "layer" + std::to_string(l) + ".";
      m.layers.push_back({draw(p + "wq", cfg.dim, cfg.dim),
                          draw(p + "wk", cfg.dim, cfg.dim),
                          draw(p + "wv", cfg.dim, cfg.dim),
                          draw(p + "wo", cfg.dim, cfg.dim),
                          draw(p + "w1", cfg.dim, 4 * cfg.dim),
                          draw(p + "w2", 4 * cfg.dim, cfg.dim)});
    }
    m.positions = sinusoidal_positions<Scalar>(cfg.context, cfg.dim);
    return m;
  }

  std::vector<Parameter<Scalar>*> params() {
    std::vector<Parameter<Scalar>*> out{&embedding};
    for (auto& l : layers) {
      out.push_back(&l.wq);
      out.push_back(&l.wk);
      out.push_back(&l.wv);
      out.push_back(&l.wo);
      out.push_back(&l.w1);
      out.push_back(&l.w2);
    }
    return out;
  }
};

// Tape bindings for one forward graph. With trainable=false the parameters
// enter as constants, so no gradient can reach them (the freeze contract).
template <typename Scalar>
struct TargetModelVars {
  ad::Var<Scalar> embedding;
  struct Layer {
    ad::Var<Scalar> wq, wk, wv, wo, w1, w2;
  };
  std::vector<Layer> layers;
};

template <typename Scalar>
TargetModelVars<Scalar> bind(ad::Tape<Scalar>& tape, TargetModel<Scalar>& m,
                             bool trainable) {
  auto wrap = [&](Parameter<Scalar>& p) {
    return trainable ? tape.param(p) : tape.constant(p.value);
  };
  TargetModelVars<Scalar> v;
  v.embedding = wrap(m.embedding);
  for (auto& l : m.layers)
    v.layers.push_back({wrap(l.wq), wrap(l.wk), wrap(l.wv), wrap(l.wo),
                        wrap(l.w1), wrap(l.w2)});
  return v;
}

// Forward from embedding rows (T x d, row t = position t) to logits (T x V).
// Rows beyond the model context are rejected.
template <typename Scalar>
ad::Var<Scalar> forward_from_embeddings(ad::Tape<Scalar>& tape,
                                        const TargetModel<Scalar>& m,
                                        const TargetModelVars<Scalar>& vars,
                                        ad::Var<Scalar> x) {
  if (x.value().cols() != m.config.dim)
    throw std::invalid_argument("forward: embedding dimension mismatch");
  if (x.value().rows() > m.config.context)
    throw std::invalid_argument("forward: sequence exceeds model context");
  const Eigen::Index T = x.value().rows();
  auto h = ad::add(x, tape.constant(m.positions.topRows(T)));
  for (size_t l = 0; l < vars.layers.size(); ++l) {
    const auto& lv = vars.layers[l];
    auto attn = multihead_attention(ad::rmsnorm_rows(h), lv.wq, lv.wk, lv.wv,
                                    lv.wo, m.config.heads, true);
    h = ad::add(h, attn);
    auto mlp = ad::matmul(
        ad::gelu(ad::matmul(ad::rmsnorm_rows(h), lv.w1)), lv.w2);
    h = ad::add(h, mlp);
  }
  return ad::matmul(ad::rmsnorm_rows(h), ad::transpose(vars.embedding));
}

// Plain (no-gradient) helpers ------------------------------------------------

template <typename Scalar>
Mat<Scalar> embed(const TargetModel<Scalar>& m, const std::vector<int>& ids) {
  Mat<Scalar> out(static_cast<Eigen::Index>(ids.size()), m.config.dim);
  for (size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] < 0 || ids[t] >= m.config.vocab_size)
      throw std::out_of_range("embed: token id out of range");
    out.row(static_cast<Eigen::Index>(t)) = m.embedding.value.row(ids[t]);
  }
  return out;
}

template <typename Scalar>
Mat<Scalar> forward(TargetModel<Scalar>& m, const Mat<Scalar>& embeddings) {
  ad::Tape<Scalar> tape;
  auto vars = bind(tape, m, /*trainable=*/false);
  auto logits =
      forward_from_embeddings(tape, m, vars, tape.constant(embeddings));
  return logits.value();
}

template <typename Scalar>
Mat<Scalar> forward_ids(TargetModel<Scalar>& m, const std::vector<int>& ids) {
  return forward(m, embed(m, ids));
}

// Frozen embedding table with cached row norms and their exact median.
template <typename Scalar>
struct EmbeddingTable {
  Mat<Scalar> vectors;  // V x d
  Eigen::Vector<Scalar, Eigen::Dynamic> norms;
  Scalar median_norm = Scalar(0);

  static EmbeddingTable from_matrix(Mat<Scalar> m) {
    EmbeddingTable t;
    t.vectors = std::move(m);
    const Eigen::Index v = t.vectors.rows();
    if (v < 2) throw std::invalid_argument("embedding table needs >= 2 rows");
    t.norms = t.vectors.rowwise().norm();
    std::vector<Scalar> sorted(t.norms.data(), t.norms.data() + v);
    std::sort(sorted.begin(), sorted.end());
    t.median_norm = (v % 2 == 1)
                        ? sorted[v / 2]
                        : (sorted[v / 2 - 1] + sorted[v / 2]) / Scalar(2);
    // Rows must be pairwise distinct for ranks to be well defined.
    for (Eigen::Index i = 0; i < v; ++i)
      for (Eigen::Index j = i + 1; j < v; ++j)
        if ((t.vectors.row(i) - t.vectors.row(j)).squaredNorm() == Scalar(0))
          throw std::invalid_argument("embedding table has duplicate rows");
    return t;
  }
};

// Checkpoint mapping ---------------------------------------------------------

namespace detail {

template <typename Scalar>
CheckpointBlock to_block(const Parameter<Scalar>& p) {
  CheckpointBlock b;
  b.name = p.name;
  b.shape = {static_cast<uint32_t>(p.value.rows()),
             static_cast<uint32_t>(p.value.cols())};
  b.data.resize(static_cast<size_t>(p.value.size()));
  size_t at = 0;
  for (Eigen::Index r = 0; r < p.value.rows(); ++r)
    for (Eigen::Index c = 0; c < p.value.cols(); ++c)
      b.data[at++] = static_cast<float>(p.value(r, c));
  return b;
}

template <typename Scalar>
void from_block(const CheckpointBlock& b, Parameter<Scalar>& p) {
  if (b.shape.size() != 2)
    throw std::runtime_error("checkpoint block '" + b.name + "': bad rank");
  p.name = b.name;
  p.value.resize(b.shape[0], b.shape[1]);
  size_t at = 0;
  for (Eigen::Index r = 0; r < p.value.rows(); ++r)
    for (Eigen::Index c = 0; c < p.value.cols(); ++c)
      p.value(r, c) = static_cast<Scalar>(b.data[at++]);
  p.zero_grad();
}

}  // namespace detail

// SHA-256 over the row-major float32 image of all parameters, in declaration
// order; the freeze contract compares this before and after transform
// training.
template <typename Scalar>
std::string parameter_hash(TargetModel<Scalar>& m) {
  std::string bytes;
  for (const auto* p : m.params()) {
    const CheckpointBlock b = detail::to_block(*p);
    bytes.append(reinterpret_cast<const char*>(b.data.data()),
                 4 * b.data.size());
  }
  return sha256_hex(bytes);
}

template <typename Scalar>
void save_target_model(const std::string& path, TargetModel<Scalar>& m,
                       const std::map<std::string, std::string>& extra = {}) {
  Checkpoint ckpt;
  ckpt.magic = "SGTC";
  ckpt.config = extra;
  ckpt.config["vocab_size"] = std::to_string(m.config.vocab_size);
  ckpt.config["dim"] = std::to_string(m.config.dim);
  ckpt.config["heads"] = std::to_string(m.config.heads);
  ckpt.config["layers"] = std::to_string(m.config.layers);
  ckpt.config["context"] = std::to_string(m.config.context);
  ckpt.config["tokenizer_mode"] = m.config.tokenizer_mode;
  for (const auto* p : m.params()) ckpt.blocks.push_back(detail::to_block(*p));
  save_checkpoint(path, ckpt);
}

template <typename Scalar = float>
TargetModel<Scalar> load_target_model(const std::string& path,
                                      std::map<std::string, std::string>*
                                          config_out = nullptr) {
  const Checkpoint ckpt = load_checkpoint(path, "SGTC");
  TargetModelConfig cfg;
  cfg.vocab_size = std::stoi(ckpt.config_at("vocab_size"));
  cfg.dim = std::stoi(ckpt.config_at("dim"));
  cfg.heads = std::stoi(ckpt.config_at("heads"));
  cfg.layers = std::stoi(ckpt.config_at("layers"));
  cfg.context = std::stoi(ckpt.config_at("context"));
  cfg.tokenizer_mode = ckpt.config_at("tokenizer_mode");
  TargetModel<Scalar> m;
  m.config = cfg;
  m.layers.resize(cfg.layers);
  m.positions = sinusoidal_positions<Scalar>(cfg.context, cfg.dim);
  detail::from_block(ckpt.block("embedding"), m.embedding);
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    detail::from_block(ckpt.block(p + "wq"), m.layers[l].wq);
    detail::from_block(ckpt.block(p + "wk"), m.layers[l].wk);
    detail::from_block(ckpt.block(p + "wv"), m.layers[l].wv);
    detail::from_block(ckpt.block(p + "wo"), m.layers[l].wo);
    detail::from_block(ckpt.block(p + "w1"), m.layers[l].w1);
    detail::from_block(ckpt.block(p + "w2"), m.layers[l].w2);
  }
  if (config_out) *config_out = ckpt.config;
  return m;
}

// Pretraining -----------------------------------------------------------------

struct PretrainOptions {
  int steps = 2000;
  int batch_size = 16;
  LrSchedule lr{1e-3f, 0.02f, true};
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double clip_norm = 1.0;
  int log_every = 50;
};

struct PretrainLogRow {
  int step;
  double loss;
  double lr;
};

// Next-token cross-entropy training of the toy model. Pad targets are
// skipped; loss NaN aborts with a diagnostic.
template <typename Scalar>
std::vector<PretrainLogRow> pretrain(TargetModel<Scalar>& m,
                                     const Dataset& data,
                                     const std::vector<int>& pool,
                                     const PretrainOptions& opt,
                                     RngStream stream) {
  BatchSampler sampler(data, pool, opt.batch_size, stream.child(101), true);
  Optimizer<Scalar> optim(m.params(), opt.optimizer);
  std::vector<PretrainLogRow> log;
  for (int step = 0; step < opt.steps; ++step) {
    const auto batch = sampler.next_batch();
    ad::Tape<Scalar> tape;
    auto vars = bind(tape, m, /*trainable=*/true);
    std::vector<ad::Var<Scalar>> losses;
    for (const auto& seq : batch) {
      const std::vector<int> inputs(seq.begin(), seq.end() - 1);
      std::vector<int> targets(seq.begin() + 1, seq.end());
      auto x = ad::gather_rows(vars.embedding, inputs);
      auto logits = forward_from_embeddings(tape, m, vars, x);
      losses.push_back(ad::softmax_xent_rows(logits, std::move(targets),
                                             data.pad_id));
    }
    auto total = losses[0];
    for (size_t i = 1; i < losses.size(); ++i) total = ad::add(total, losses[i]);
    total = ad::scale(total, Scalar(1) / static_cast<Scalar>(losses.size()));
    const double loss = static_cast<double>(total.scalar());
    if (!std::isfinite(loss))
      throw std::runtime_error("pretrain: loss diverged (NaN/Inf) at step " +
                               std::to_string(step));
    optim.zero_grad();
    tape.backward(total);
    clip_global_norm(m.params(), opt.clip_norm);
    const float lr = opt.lr.at(step, opt.steps);
    optim.step(static_cast<Scalar>(lr));
    if (step % opt.log_every == 0 || step + 1 == opt.steps)
      log.push_back({step, loss, lr});
  }
  return log;
}

}  // namespace sgt
