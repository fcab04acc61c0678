#pragma once

// Mapping from config files ([model] / [train] / [loss] / [sgt] sections)
// onto the typed run configurations. Unknown keys are rejected.

#include <cmath>

#include "sgt/config.hpp"
#include "sgt/lm.hpp"
#include "sgt/losses.hpp"
#include "sgt/trainer.hpp"

namespace sgt {

struct LmRunConfig {
  TargetModelConfig model;
  PretrainOptions pretrain;
  uint64_t seed = 0;
  int chunk_len = 0;  // defaults to model context
};

inline LmRunConfig lm_run_config(const ConfigSections& sections) {
  ConfigReader r(sections);
  LmRunConfig out;
  out.model.vocab_size = r.get_int("model", "vocab_size", 256);
  out.model.dim = r.get_int("model", "dim", 64);
  out.model.heads = r.get_int("model", "heads", 4);
  out.model.layers = r.get_int("model", "layers", 2);
  out.model.context = r.get_int("model", "context", 64);
  out.model.tokenizer_mode = r.get_string("model", "tokenizer_mode", "byte");
  out.pretrain.steps = r.get_int("train", "steps", 2000);
  out.pretrain.batch_size = r.get_int("train", "batch_size", 16);
  out.pretrain.lr.base_rate =
      static_cast<float>(r.get_double("train", "lr", 1e-3));
  out.pretrain.lr.warmup_fraction =
      static_cast<float>(r.get_double("train", "warmup_fraction", 0.02));
  out.pretrain.lr.cosine_decay = r.get_bool("train", "cosine_decay", true);
  out.pretrain.optimizer =
      optimizer_from_name(r.get_string("train", "optimizer", "adam"));
  out.pretrain.clip_norm = r.get_double("train", "clip_norm", 1.0);
  out.pretrain.log_every = r.get_int("train", "log_every", 50);
  out.seed = static_cast<uint64_t>(r.get_int("train", "seed", 0));
  out.chunk_len = r.get_int("train", "chunk_len", out.model.context);
  r.finish();
  return out;
}

inline TrainConfig sgt_run_config(const ConfigSections& sections) {
  ConfigReader r(sections);
  TrainConfig cfg;
  cfg.steps = r.get_int("train", "steps", 2000);
  cfg.batch_size = r.get_int("train", "batch_size", 8);
  cfg.lr.base_rate = static_cast<float>(r.get_double("train", "lr", 3e-4));
  cfg.lr.warmup_fraction =
      static_cast<float>(r.get_double("train", "warmup_fraction", 0.05));
  cfg.lr.cosine_decay = r.get_bool("train", "cosine_decay", true);
  cfg.optimizer =
      optimizer_from_name(r.get_string("train", "optimizer", "adam"));
  cfg.clip_norm = r.get_double("train", "clip_norm", 1.0);
  cfg.eval_cadence = r.get_int("train", "eval_cadence", 200);
  cfg.probe_tokens = r.get_int("train", "probe_tokens", 512);
  cfg.seed = static_cast<uint64_t>(r.get_int("train", "seed", 0));
  cfg.chunk_len = r.get_int("train", "chunk_len", 0);

  cfg.loss.alpha_mi =
      static_cast<float>(r.get_double("loss", "alpha_mi", 1.0));
  cfg.loss.alpha_abscos =
      static_cast<float>(r.get_double("loss", "alpha_abscos", 1.0));
  cfg.loss.alpha_norm =
      static_cast<float>(r.get_double("loss", "alpha_norm", 0.1));
  cfg.loss.demo = demo_loss_from_name(r.get_string("loss", "demo", "off"));
  cfg.loss.demo_weight =
      static_cast<float>(r.get_double("loss", "demo_weight", 1.0));
  cfg.loss.mi_double_sum = r.get_bool("loss", "mi_double_sum", false);
  cfg.loss.mi_warmup_fraction =
      static_cast<float>(r.get_double("loss", "mi_warmup_fraction", 0.1));

  cfg.estimator.heads = r.get_int("sgt", "heads", 2);
  cfg.estimator.hidden_mult = r.get_int("sgt", "hidden_mult", 4);
  cfg.estimator.causal = r.get_bool("sgt", "causal", false);
  cfg.estimator.log_sigma_min = static_cast<float>(
      r.get_double("sgt", "log_sigma_min", std::log(1e-4)));
  cfg.estimator.log_sigma_max = static_cast<float>(
      r.get_double("sgt", "log_sigma_max", std::log(10.0)));
  cfg.estimator.sigma_init_frac =
      static_cast<float>(r.get_double("sgt", "sigma_init_frac", 0.05));
  cfg.estimator.trunk_init_std =
      static_cast<float>(r.get_double("sgt", "trunk_init_std", 0.08));
  r.finish();
  cfg.validate();
  return cfg;
}

}  // namespace sgt
