#include "sgt/report.hpp"

#include <sstream>

namespace sgt {

using nlohmann::json;

namespace {

json optional_to_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

json report_to_json(const PrivacyReport& r) {
  json j;
  j["nn_fr"] = r.nn_fr;
  j["mrp_fr"] = r.mrp_fr;
  j["mrp_r"] = r.mrp_r;
  for (const auto& [k, v] : r.ttr) j["ttr_" + std::to_string(k)] = v;
  for (const auto& [k, v] : r.sym_ttr) j["sym_ttr_" + std::to_string(k)] = v;
  j["hist_entropy"] = r.hist_entropy;
  j["mi_mean"] = r.mi_mean;
  j["mi_sum"] = r.mi_sum;
  j["pac_adv"] = r.pac_adv;
  j["pac_n"] = r.pac_n;
  j["beamclean_fr"] = optional_to_json(r.beamclean_fr);
  j["dp_epsilon"] = optional_to_json(r.dp_epsilon);
  j["dp_sigma"] = optional_to_json(r.dp_sigma);
  j["hist_tokens"] = r.hist_tokens;
  j["mi_samples"] = r.mi_samples;
  j["mechanism"] = r.mechanism;
  j["model_hash"] = r.model_hash;
  j["target_hash"] = r.target_hash;
  j["dataset_sha256"] = r.dataset_sha256;
  j["seed"] = r.seed;
  return j;
}

PrivacyReport report_from_json(const json& j) {
  PrivacyReport r;
  r.nn_fr = j.at("nn_fr").get<double>();
  r.mrp_fr = j.at("mrp_fr").get<double>();
  r.mrp_r = j.at("mrp_r").get<int>();
  for (const auto& [key, value] : j.items()) {
    if (key.rfind("sym_ttr_", 0) == 0)
      r.sym_ttr[std::stoi(key.substr(8))] = value.get<double>();
    else if (key.rfind("ttr_", 0) == 0)
      r.ttr[std::stoi(key.substr(4))] = value.get<double>();
  }
  r.hist_entropy = j.at("hist_entropy").get<double>();
  r.mi_mean = j.at("mi_mean").get<double>();
  r.mi_sum = j.at("mi_sum").get<double>();
  r.pac_adv = j.at("pac_adv").get<double>();
  r.pac_n = j.at("pac_n").get<int64_t>();
  if (!j.at("beamclean_fr").is_null())
    r.beamclean_fr = j.at("beamclean_fr").get<double>();
  if (!j.at("dp_epsilon").is_null())
    r.dp_epsilon = j.at("dp_epsilon").get<double>();
  if (!j.at("dp_sigma").is_null()) r.dp_sigma = j.at("dp_sigma").get<double>();
  r.hist_tokens = j.at("hist_tokens").get<int64_t>();
  r.mi_samples = j.at("mi_samples").get<int64_t>();
  r.mechanism = j.at("mechanism").get<std::string>();
  r.model_hash = j.at("model_hash").get<std::string>();
  r.target_hash = j.at("target_hash").get<std::string>();
  r.dataset_sha256 = j.at("dataset_sha256").get<std::string>();
  r.seed = j.at("seed").get<uint64_t>();
  return r;
}

void validate_report_json(const json& j) {
  static const char* kRequired[] = {
      "nn_fr",      "mrp_fr",   "mrp_r",       "hist_entropy", "mi_mean",
      "mi_sum",     "pac_adv",  "pac_n",       "beamclean_fr", "dp_epsilon",
      "dp_sigma",   "hist_tokens", "mi_samples", "mechanism",
      "model_hash", "target_hash", "dataset_sha256", "seed"};
  for (const char* key : kRequired)
    if (!j.contains(key))
      throw std::runtime_error(std::string("report: missing key ") + key);
  auto percent_in_range = [&](const std::string& key) {
    const double v = j.at(key).get<double>();
    if (!(v >= 0.0 && v <= 100.0))
      throw std::runtime_error("report: " + key + " outside [0, 100]");
  };
  percent_in_range("nn_fr");
  percent_in_range("mrp_fr");
  percent_in_range("hist_entropy");
  percent_in_range("pac_adv");
  const PrivacyReport r = report_from_json(j);
  if (r.ttr.empty())
    throw std::runtime_error("report: no ttr_k entries");
  for (const auto& [k, v] : r.ttr)
    if (!(v >= 0.0 && v <= 100.0))
      throw std::runtime_error("report: ttr out of range");
  for (const auto& [k, v] : r.sym_ttr) {
    if (!(v >= 0.0 && v <= 100.0))
      throw std::runtime_error("report: sym_ttr out of range");
    const auto t = r.ttr.find(k);
    if (t != r.ttr.end() && v > t->second + 1e-9)
      throw std::runtime_error("report: sym_ttr exceeds ttr at k=" +
                               std::to_string(k));
  }
}

std::string rank_histogram_csv(const RankHistogram& hist) {
  std::ostringstream out;
  out << "rank,count\n";
  for (int r = 1; r <= hist.vocab(); ++r)
    out << r << ',' << hist.counts[r - 1] << "\n";
  return out.str();
}

}  // namespace sgt
