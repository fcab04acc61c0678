#pragma once

// Flat JSON privacy report plus the rank-histogram CSV dump. The BeamClean
// failure-rate field is reserved for externally computed values and stays
// null here.

#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "sgt/privacy.hpp"

namespace sgt {

struct PrivacyReport {
  double nn_fr = 0.0;
  double mrp_fr = 0.0;
  int mrp_r = 0;
  std::map<int, double> ttr;      // k -> percent
  std::map<int, double> sym_ttr;  // k -> percent
  double hist_entropy = 0.0;      // percent of maximal
  double mi_mean = 0.0;           // nats, mean over coordinates
  double mi_sum = 0.0;            // nats, summed over coordinates
  double pac_adv = 0.0;           // percent
  int64_t pac_n = 0;
  std::optional<double> beamclean_fr;  // reserved, external
  std::optional<double> dp_epsilon;    // constant-noise mechanism only
  std::optional<double> dp_sigma;
  int64_t hist_tokens = 0;
  int64_t mi_samples = 0;
  std::string mechanism;
  std::string model_hash;    // obfuscation mechanism parameters
  std::string target_hash;   // frozen model parameters
  std::string dataset_sha256;
  uint64_t seed = 0;
};

nlohmann::json report_to_json(const PrivacyReport& r);
PrivacyReport report_from_json(const nlohmann::json& j);

// Structural check: required keys present with the right types, percents in
// [0, 100], sym_ttr <= ttr at equal k. Throws on violation.
void validate_report_json(const nlohmann::json& j);

std::string rank_histogram_csv(const RankHistogram& hist);

}  // namespace sgt
