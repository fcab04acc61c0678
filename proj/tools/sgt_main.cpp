// Command-line front door: pretraining the toy target model, training the
// stained-glass transform against it, obfuscating text, running
// reconstruction attacks, evaluating privacy/utility, and sweeping the
// constant-noise baseline. Every command is deterministic given its inputs
// and seed, writes its artifacts under --out, and records a manifest with
// content hashes. Errors leave a machine-readable JSON object on stdout and
// a nonzero exit code.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sgt/manifest.hpp"
#include "sgt/run_config.hpp"
#include "sgt/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

// --out falls back to $SGT_OUT_ROOT/<command>.
std::string resolve_out_dir(std::string out, const std::string& command) {
  if (out.empty()) {
    const char* root = std::getenv("SGT_OUT_ROOT");
    if (!root)
      throw std::runtime_error(
          "--out not given and SGT_OUT_ROOT is not set");
    out = (fs::path(root) / command).string();
  }
  fs::create_directories(out);
  return out;
}

sgt::Tokenizer tokenizer_for(const std::string& mode,
                             const std::string& vocab_path,
                             const std::string& corpus_text) {
  if (mode == "byte") return sgt::Tokenizer::byte_level();
  if (mode != "word") throw std::runtime_error("unknown tokenizer mode " + mode);
  if (!vocab_path.empty()) return sgt::Tokenizer::load_vocab(vocab_path);
  if (!corpus_text.empty())
    return sgt::Tokenizer::word_level_from_corpus(corpus_text);
  throw std::runtime_error("word tokenizer needs --vocab or a corpus");
}

std::vector<int> split_pool(const sgt::Dataset& data,
                            const std::string& split) {
  if (split == "train") return data.train_chunk_ids();
  if (split == "eval") return data.eval_chunk_ids();
  if (split == "all") return data.all_chunk_ids();
  throw std::runtime_error("unknown split '" + split + "'");
}

struct CommonEvalFlags {
  int64_t hist_tokens = 10000;
  int64_t mi_samples = 100000;
  int mi_cross = 1024;
  int64_t utility_tokens = 2048;
  int64_t pac_n = 0;
  uint64_t seed = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--hist-tokens", hist_tokens,
                    "token budget for rank histogram and attacks");
    cmd->add_option("--mi-samples", mi_samples,
                    "obfuscation draws for the feature mi estimate");
    cmd->add_option("--mi-cross", mi_cross,
                    "cross components for the mi marginal mixture");
    cmd->add_option("--utility-tokens", utility_tokens,
                    "token budget for agreement / ce gap");
    cmd->add_option("--pac-n", pac_n,
                    "vocabulary size for the pac bound (0 = model vocab)");
    cmd->add_option("--seed", seed, "evaluation seed");
  }

  sgt::EvalOptions to_options() const {
    sgt::EvalOptions opt;
    opt.hist_tokens = hist_tokens;
    opt.mi_samples = mi_samples;
    opt.mi_cross = mi_cross;
    opt.utility_tokens = utility_tokens;
    opt.pac_n = pac_n;
    opt.seed = seed;
    return opt;
  }
};

int cmd_train_lm(const std::string& corpus_path, const std::string& config_path,
                 std::string out, int64_t seed_override) {
  const std::string out_dir = resolve_out_dir(std::move(out), "train-lm");
  sgt::RunManifest manifest;
  manifest.command = "train-lm";
  manifest.started_at = sgt::iso8601_utc_now();
  manifest.config_path = config_path;

  auto run_cfg = sgt::lm_run_config(sgt::load_config_file(config_path));
  if (seed_override >= 0) run_cfg.seed = static_cast<uint64_t>(seed_override);
  manifest.config_sha256 = sgt::sha256_file(config_path);
  manifest.seed = run_cfg.seed;

  const std::string text = read_text_file(corpus_path);
  manifest.inputs["corpus"] = sgt::sha256_hex(text);
  auto tok = tokenizer_for(run_cfg.model.tokenizer_mode, "", text);
  if (tok.mode() == sgt::TokenizerMode::kWord) {
    run_cfg.model.vocab_size = tok.vocab_size();
    tok.save_vocab((fs::path(out_dir) / "vocab.txt").string());
    manifest.outputs["vocab.txt"] = "";
  }
  auto data = sgt::Dataset::from_text(tok, text, run_cfg.chunk_len);

  sgt::RngStream init_rng(run_cfg.seed, 0);
  auto model = sgt::TargetModel<float>::init(run_cfg.model, init_rng);
  auto log = sgt::pretrain(model, data, data.train_chunk_ids(),
                           run_cfg.pretrain, sgt::RngStream(run_cfg.seed, 1));

  std::ostringstream csv;
  csv.precision(9);
  csv << "step,loss,lr\n";
  for (const auto& row : log)
    csv << row.step << ',' << row.loss << ',' << row.lr << "\n";
  write_text_file((fs::path(out_dir) / "pretrain_log.csv").string(),
                  csv.str());
  sgt::save_target_model((fs::path(out_dir) / "target.ckpt").string(), model,
                         {{"dataset_sha256", data.sha256},
                          {"chunk_len", std::to_string(data.chunk_len)}});
  manifest.outputs["target.ckpt"] = "";
  manifest.outputs["pretrain_log.csv"] = "";
  manifest.finished_at = sgt::iso8601_utc_now();
  sgt::write_manifest(out_dir, manifest);
  sgt::verify_manifest(out_dir);
  std::cout << json{{"ok", true}, {"out", out_dir}}.dump() << "\n";
  return 0;
}

int cmd_train_sgt(const std::string& target_path, const std::string& corpus_path,
                  const std::string& config_path, std::string out,
                  const std::string& vocab_path, int64_t seed_override) {
  const std::string out_dir = resolve_out_dir(std::move(out), "train-sgt");
  sgt::RunManifest manifest;
  manifest.command = "train-sgt";
  manifest.started_at = sgt::iso8601_utc_now();
  manifest.config_path = config_path;
  manifest.config_sha256 = sgt::sha256_file(config_path);
  manifest.inputs["target"] = sgt::sha256_file(target_path);

  auto sections = sgt::load_config_file(config_path);
  auto cfg = sgt::sgt_run_config(sections);
  if (seed_override >= 0) cfg.seed = static_cast<uint64_t>(seed_override);
  manifest.seed = cfg.seed;

  std::map<std::string, std::string> target_meta;
  auto target = sgt::load_target_model<float>(target_path, &target_meta);
  const std::string text = read_text_file(corpus_path);
  manifest.inputs["corpus"] = sgt::sha256_hex(text);
  auto tok = tokenizer_for(target.config.tokenizer_mode, vocab_path, text);
  const int chunk_len =
      cfg.chunk_len > 0 ? cfg.chunk_len : target.config.context;
  auto data = sgt::Dataset::from_text(tok, text, chunk_len);

  auto result = sgt::train_sgt(target, data, cfg);

  write_text_file((fs::path(out_dir) / "steps.csv").string(),
                  sgt::step_log_csv(result.steps));
  write_text_file((fs::path(out_dir) / "probes.csv").string(),
                  sgt::probe_log_csv(result.probes));
  sgt::SgtBundle bundle;
  bundle.estimator = result.estimator;
  bundle.embedding = target.embedding.value;
  bundle.tokenizer_mode = target.config.tokenizer_mode;
  bundle.extra["dataset_sha256"] = data.sha256;
  bundle.extra["target_hash"] = result.target_hash_before;
  bundle.extra["median_norm"] = std::to_string(result.median_norm);
  bundle.extra["chunk_len"] = std::to_string(data.chunk_len);
  sgt::save_sgt((fs::path(out_dir) / "sgt.ckpt").string(), bundle);
  manifest.outputs["sgt.ckpt"] = "";
  manifest.outputs["steps.csv"] = "";
  manifest.outputs["probes.csv"] = "";
  manifest.finished_at = sgt::iso8601_utc_now();
  sgt::write_manifest(out_dir, manifest);
  sgt::verify_manifest(out_dir);

  if (result.aborted_nan) {
    std::cout << json{{"error",
                       {{"type", "nan_abort"},
                        {"message", "loss became non-finite at step " +
                                        std::to_string(result.abort_step) +
                                        "; last-good checkpoint written"}}},
                      {"out", out_dir}}
                     .dump()
              << "\n";
    return 1;
  }
  std::cout << json{{"ok", true}, {"out", out_dir}}.dump() << "\n";
  return 0;
}

int cmd_obfuscate(const std::string& sgt_path, const std::string& text_path,
                  bool use_stdin, const std::string& out_file,
                  const std::string& vocab_path, uint64_t seed) {
  auto bundle = sgt::load_sgt(sgt_path);
  std::string text;
  if (use_stdin) {
    std::stringstream buf;
    buf << std::cin.rdbuf();
    text = buf.str();
  } else {
    text = read_text_file(text_path);
  }
  auto tok = tokenizer_for(bundle.tokenizer_mode, vocab_path, "");
  const int chunk_len = bundle.extra.count("chunk_len")
                            ? std::stoi(bundle.extra.at("chunk_len"))
                            : bundle.estimator.config.context;
  auto data = sgt::Dataset::from_text(tok, text, chunk_len);

  sgt::EmbeddingDump dump;
  dump.d = static_cast<uint32_t>(bundle.embedding.cols());
  dump.seq_len = static_cast<uint32_t>(chunk_len);
  sgt::RngStream noise(seed, 7000);
  for (const auto& seq : data.chunks) {
    sgt::MatF clean(chunk_len, bundle.embedding.cols());
    for (int t = 0; t < chunk_len; ++t)
      clean.row(t) = bundle.embedding.row(seq[t]);
    auto obf = sgt::sample_sgt(bundle.estimator, clean, noise);
    dump.ids.push_back(seq);
    std::vector<float> flat(static_cast<size_t>(chunk_len) * dump.d);
    for (int t = 0; t < chunk_len; ++t)
      for (uint32_t j = 0; j < dump.d; ++j)
        flat[t * dump.d + j] = obf.obfuscated(t, j);
    dump.floats.push_back(std::move(flat));
  }
  sgt::save_embedding_dump(out_file, dump);
  std::cout << json{{"ok", true},
                    {"out", out_file},
                    {"sequences", dump.floats.size()},
                    {"sha256", sgt::sha256_file(out_file)}}
                   .dump()
            << "\n";
  return 0;
}

int cmd_attack(const std::string& mech, const std::string& attack,
               const std::string& input_path, const std::string& target_path,
               std::string out, int mrp_r_flag) {
  const std::string out_dir = resolve_out_dir(std::move(out), "attack");
  sgt::RunManifest manifest;
  manifest.command = "attack";
  manifest.started_at = sgt::iso8601_utc_now();
  manifest.inputs["dump"] = sgt::sha256_file(input_path);
  manifest.inputs["target"] = sgt::sha256_file(target_path);

  auto dump = sgt::load_embedding_dump(input_path);
  if (!dump.has_ids)
    throw std::runtime_error("attack: dump carries no token ids");
  auto target = sgt::load_target_model<float>(target_path);
  const sgt::MatF& table = target.embedding.value;
  if (static_cast<int>(dump.d) != target.config.dim)
    throw std::runtime_error("attack: dump dimension mismatch");

  std::vector<Eigen::RowVectorXf> xt;
  std::vector<int> truth;
  std::vector<std::pair<int, int>> where;  // (sequence, position)
  sgt::RankHistogram hist(target.config.vocab_size);
  for (size_t s = 0; s < dump.floats.size(); ++s) {
    for (uint32_t t = 0; t < dump.seq_len; ++t) {
      const int id = dump.ids[s][t];
      if (id == 0) continue;  // pad
      Eigen::RowVectorXf row(dump.d);
      for (uint32_t j = 0; j < dump.d; ++j)
        row(j) = dump.floats[s][t * dump.d + j];
      hist.add(sgt::reconstruction_rank(row, table, id));
      xt.push_back(std::move(row));
      truth.push_back(id);
      where.emplace_back(static_cast<int>(s), static_cast<int>(t));
    }
  }
  const bool use_mrp = attack == "mrp";
  const int r = use_mrp ? (mrp_r_flag > 0 ? mrp_r_flag : sgt::calibrate_mrp(hist))
                        : 0;
  auto res = sgt::run_attack(xt, truth, table, use_mrp, r);

  std::ostringstream csv;
  csv << "sequence,position,true_id,predicted_id,rank,failure\n";
  for (size_t i = 0; i < xt.size(); ++i)
    csv << where[i].first << ',' << where[i].second << ',' << truth[i] << ','
        << res.predicted[i] << ','
        << sgt::reconstruction_rank(xt[i], table, truth[i]) << ','
        << static_cast<int>(res.failure[i]) << "\n";
  write_text_file((fs::path(out_dir) / "attack_result.csv").string(),
                  csv.str());
  write_text_file((fs::path(out_dir) / "rank_histogram.csv").string(),
                  sgt::rank_histogram_csv(hist));
  json summary{{"mechanism", mech},
               {"attack", attack},
               {"failure_rate", res.failure_rate_percent},
               {"tokens", xt.size()}};
  if (use_mrp) summary["mrp_r"] = r;
  write_text_file((fs::path(out_dir) / "summary.json").string(),
                  summary.dump(2) + "\n");
  manifest.outputs["attack_result.csv"] = "";
  manifest.outputs["rank_histogram.csv"] = "";
  manifest.outputs["summary.json"] = "";
  manifest.finished_at = sgt::iso8601_utc_now();
  sgt::write_manifest(out_dir, manifest);
  sgt::verify_manifest(out_dir);
  std::cout << json{{"ok", true},
                    {"out", out_dir},
                    {"failure_rate", res.failure_rate_percent}}
                   .dump()
            << "\n";
  return 0;
}

int cmd_evaluate(const std::string& sgt_path, const std::string& target_path,
                 const std::string& corpus_path, const std::string& split,
                 std::string out, const std::string& vocab_path,
                 const std::string& mech_name, double mech_sigma,
                 const CommonEvalFlags& flags) {
  const std::string out_dir = resolve_out_dir(std::move(out), "evaluate");
  sgt::RunManifest manifest;
  manifest.command = "evaluate";
  manifest.started_at = sgt::iso8601_utc_now();
  manifest.seed = flags.seed;
  manifest.inputs["target"] = sgt::sha256_file(target_path);

  auto target = sgt::load_target_model<float>(target_path);
  const std::string text = read_text_file(corpus_path);
  manifest.inputs["corpus"] = sgt::sha256_hex(text);
  auto tok = tokenizer_for(target.config.tokenizer_mode, vocab_path, text);

  sgt::SgtBundle bundle;
  sgt::Mechanism mech;
  int chunk_len = target.config.context;
  if (mech_name == "sgt") {
    if (sgt_path.empty()) throw std::runtime_error("evaluate: --sgt required");
    manifest.inputs["sgt"] = sgt::sha256_file(sgt_path);
    bundle = sgt::load_sgt(sgt_path);
    if (bundle.extra.count("chunk_len"))
      chunk_len = std::stoi(bundle.extra.at("chunk_len"));
    mech = sgt::sgt_mechanism(bundle.estimator);
  } else if (mech_name == "gaussian") {
    mech = sgt::constant_noise_mechanism(static_cast<float>(mech_sigma));
  } else {
    throw std::runtime_error("evaluate: unknown --mech " + mech_name);
  }

  auto data = sgt::Dataset::from_text(tok, text, chunk_len);
  auto opt = flags.to_options();
  auto res = sgt::evaluate(target, mech, data, split_pool(data, split), opt);

  if (mech_name == "sgt")
    res.report.model_hash = sgt::parameter_hash(bundle.estimator);
  if (mech_name == "gaussian") {
    res.report.dp_sigma = mech_sigma;
    if (mech_sigma > 0)
      res.report.dp_epsilon = sgt::epsilon_of(
          mech_sigma, sgt::l2_sensitivity(target.embedding.value), 1e-5);
  }
  auto report_json = sgt::report_to_json(res.report);
  sgt::validate_report_json(report_json);
  write_text_file((fs::path(out_dir) / "report.json").string(),
                  report_json.dump(2) + "\n");
  write_text_file((fs::path(out_dir) / "rank_histogram.csv").string(),
                  sgt::rank_histogram_csv(res.histogram));
  json utility{{"top1_agreement", res.utility.top1_agreement},
               {"ce_gap", res.utility.ce_gap},
               {"tokens", res.utility.tokens}};
  write_text_file((fs::path(out_dir) / "utility.json").string(),
                  utility.dump(2) + "\n");
  manifest.outputs["report.json"] = "";
  manifest.outputs["rank_histogram.csv"] = "";
  manifest.outputs["utility.json"] = "";
  manifest.finished_at = sgt::iso8601_utc_now();
  sgt::write_manifest(out_dir, manifest);
  sgt::verify_manifest(out_dir);
  std::cout << json{{"ok", true},
                    {"out", out_dir},
                    {"nn_fr", res.report.nn_fr},
                    {"top1_agreement", res.utility.top1_agreement}}
                   .dump()
            << "\n";
  return 0;
}

int cmd_dp_sweep(const std::string& target_path, const std::string& corpus_path,
                 const std::string& sigmas_arg, const std::string& split,
                 std::string out, const std::string& vocab_path,
                 double dp_delta, const CommonEvalFlags& flags) {
  const std::string out_dir = resolve_out_dir(std::move(out), "dp-sweep");
  sgt::RunManifest manifest;
  manifest.command = "dp-sweep";
  manifest.started_at = sgt::iso8601_utc_now();
  manifest.seed = flags.seed;
  manifest.inputs["target"] = sgt::sha256_file(target_path);

  std::vector<double> sigmas;
  std::stringstream ss(sigmas_arg);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) sigmas.push_back(std::stod(item));
  }
  if (sigmas.empty()) throw std::runtime_error("dp-sweep: empty sigma list");

  auto target = sgt::load_target_model<float>(target_path);
  const std::string text = read_text_file(corpus_path);
  manifest.inputs["corpus"] = sgt::sha256_hex(text);
  auto tok = tokenizer_for(target.config.tokenizer_mode, vocab_path, text);
  auto data = sgt::Dataset::from_text(tok, text, target.config.context);

  auto rows = sgt::dp_sweep(target, data, split_pool(data, split), sigmas,
                            dp_delta, flags.to_options());
  write_text_file((fs::path(out_dir) / "sweep.csv").string(),
                  sgt::sweep_csv(rows));
  manifest.outputs["sweep.csv"] = "";
  manifest.finished_at = sgt::iso8601_utc_now();
  sgt::write_manifest(out_dir, manifest);
  sgt::verify_manifest(out_dir);
  std::cout << json{{"ok", true}, {"out", out_dir}, {"rows", rows.size()}}
                   .dump()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stained-glass transform toolkit"};
  app.require_subcommand(1);

  // train-lm
  std::string lm_corpus, lm_config, lm_out;
  int64_t lm_seed = -1;
  auto* train_lm = app.add_subcommand("train-lm", "pretrain the toy target model");
  train_lm->add_option("--corpus", lm_corpus)->required();
  train_lm->add_option("--config", lm_config)->required();
  train_lm->add_option("--out", lm_out);
  train_lm->add_option("--seed", lm_seed, "overrides the config seed");

  // train-sgt
  std::string ts_target, ts_corpus, ts_config, ts_out, ts_vocab;
  int64_t ts_seed = -1;
  auto* train_sgt_cmd =
      app.add_subcommand("train-sgt", "train the transform against a frozen target");
  train_sgt_cmd->add_option("--target", ts_target)->required();
  train_sgt_cmd->add_option("--corpus", ts_corpus)->required();
  train_sgt_cmd->add_option("--config", ts_config)->required();
  train_sgt_cmd->add_option("--out", ts_out);
  train_sgt_cmd->add_option("--vocab", ts_vocab, "word-level vocabulary file");
  train_sgt_cmd->add_option("--seed", ts_seed, "overrides the config seed");

  // obfuscate
  std::string ob_sgt, ob_text, ob_out, ob_vocab;
  bool ob_stdin = false;
  uint64_t ob_seed = 0;
  auto* obfuscate = app.add_subcommand("obfuscate", "obfuscate text to an embedding dump");
  obfuscate->add_option("--sgt", ob_sgt)->required();
  obfuscate->add_option("--text", ob_text);
  obfuscate->add_flag("--stdin", ob_stdin, "read text from stdin");
  obfuscate->add_option("--out", ob_out)->required();
  obfuscate->add_option("--vocab", ob_vocab, "word-level vocabulary file");
  obfuscate->add_option("--seed", ob_seed);

  // attack
  std::string at_mech = "sgt", at_attack = "nn", at_input, at_target, at_out;
  int at_mrp_r = 0;
  auto* attack = app.add_subcommand("attack", "run a reconstruction attack on a dump");
  attack->add_option("--mech", at_mech)->check(CLI::IsMember({"sgt", "gaussian"}));
  attack->add_option("--attack", at_attack)->check(CLI::IsMember({"nn", "mrp"}));
  attack->add_option("--input", at_input)->required();
  attack->add_option("--target", at_target)->required();
  attack->add_option("--out", at_out);
  attack->add_option("--mrp-r", at_mrp_r, "override the calibrated rank offset");

  // evaluate
  std::string ev_sgt, ev_target, ev_corpus, ev_split = "eval", ev_out, ev_vocab;
  std::string ev_mech = "sgt";
  double ev_sigma = 0.0;
  CommonEvalFlags ev_flags;
  auto* evaluate = app.add_subcommand("evaluate", "full privacy/utility evaluation");
  evaluate->add_option("--sgt", ev_sgt);
  evaluate->add_option("--target", ev_target)->required();
  evaluate->add_option("--corpus", ev_corpus)->required();
  evaluate->add_option("--split", ev_split)->check(CLI::IsMember({"train", "eval", "all"}));
  evaluate->add_option("--out", ev_out);
  evaluate->add_option("--vocab", ev_vocab, "word-level vocabulary file");
  evaluate->add_option("--mech", ev_mech)->check(CLI::IsMember({"sgt", "gaussian"}));
  evaluate->add_option("--sigma", ev_sigma, "gaussian mechanism stddev");
  ev_flags.attach(evaluate);

  // dp-sweep
  std::string dp_target, dp_corpus, dp_sigmas, dp_split = "eval", dp_out, dp_vocab;
  double dp_delta = 1e-5;
  CommonEvalFlags dp_flags;
  dp_flags.hist_tokens = 10000;
  dp_flags.mi_samples = 2000;  // the sweep reports nn_fr/utility, not mi
  dp_flags.mi_cross = 64;
  auto* dp_sweep_cmd = app.add_subcommand("dp-sweep", "constant-noise sigma sweep");
  dp_sweep_cmd->add_option("--target", dp_target)->required();
  dp_sweep_cmd->add_option("--corpus", dp_corpus)->required();
  dp_sweep_cmd->add_option("--sigmas", dp_sigmas)->required();
  dp_sweep_cmd->add_option("--split", dp_split)->check(CLI::IsMember({"train", "eval", "all"}));
  dp_sweep_cmd->add_option("--out", dp_out);
  dp_sweep_cmd->add_option("--vocab", dp_vocab, "word-level vocabulary file");
  dp_sweep_cmd->add_option("--dp-delta", dp_delta);
  dp_flags.attach(dp_sweep_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_lm->parsed())
      return cmd_train_lm(lm_corpus, lm_config, lm_out, lm_seed);
    if (train_sgt_cmd->parsed())
      return cmd_train_sgt(ts_target, ts_corpus, ts_config, ts_out, ts_vocab,
                           ts_seed);
    if (obfuscate->parsed()) {
      if (ob_text.empty() == !ob_stdin)
        throw std::runtime_error("obfuscate: give exactly one of --text/--stdin");
      return cmd_obfuscate(ob_sgt, ob_text, ob_stdin, ob_out, ob_vocab,
                           ob_seed);
    }
    if (attack->parsed())
      return cmd_attack(at_mech, at_attack, at_input, at_target, at_out,
                        at_mrp_r);
    if (evaluate->parsed())
      return cmd_evaluate(ev_sgt, ev_target, ev_corpus, ev_split, ev_out,
                          ev_vocab, ev_mech, ev_sigma, ev_flags);
    if (dp_sweep_cmd->parsed())
      return cmd_dp_sweep(dp_target, dp_corpus, dp_sigmas, dp_split, dp_out,
                          dp_vocab, dp_delta, dp_flags);
  } catch (const std::exception& ex) {
    std::cout << json{{"error",
                       {{"type", "runtime"}, {"message", ex.what()}}}}
                     .dump()
              << "\n";
    return 1;
  }
  return 2;
}
