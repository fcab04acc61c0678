#pragma once

// Reconstruction attacks and privacy metrics over obfuscated token
// embeddings. Every token position is treated as one dataset item; distances
// are L2 in embedding space; ranks are 1-based with ties broken toward the
// smaller token id; entropies are natural-log (nats).

#include <cstdint>
#include <string>
#include <vector>

#include "sgt/ad.hpp"

namespace sgt {

struct RankHistogram {
  std::vector<int64_t> counts;  // counts[r - 1] = tokens with rank r
  int64_t total = 0;

  RankHistogram() = default;
  explicit RankHistogram(int vocab) : counts(vocab, 0) {}
  int vocab() const { return static_cast<int>(counts.size()); }
  void add(int rank);
};

// 1-based position of the true row in the distance-sorted vocabulary.
int reconstruction_rank(const Eigen::RowVectorXf& xtilde, const MatF& table,
                        int true_id);

// Nearest clean row.
int nn_attack(const Eigen::RowVectorXf& xtilde, const MatF& table);

// r-th farthest clean row (ascending rank position |V| - r + 1); r = |V|
// degenerates to the nearest neighbor.
int mrp_attack(const Eigen::RowVectorXf& xtilde, const MatF& table, int r);

// Greybox calibration: r = |V| - mode(rank) + 1, mode ties resolved at the
// smallest rank.
int calibrate_mrp(const RankHistogram& hist);

// Percent of tokens with rank > k.
double ttr_k(const RankHistogram& hist, int k);

// Percent of tokens with k < rank < |V| - k; requires 0 <= k < |V|/2.
double sym_ttr_k(const RankHistogram& hist, int k);

// Shannon entropy of the rank distribution as a percent of log |V|.
double hist_entropy_percent(const RankHistogram& hist);

// Inverts the KL-vs-MI reconstruction bound at prior success 1/n: returns
// the percent bound on per-feature reconstruction success. mi >= log n
// saturates at 100.
double pac_adv(double mi_nats, int64_t n);

struct AttackResult {
  std::vector<int> predicted;
  std::vector<int> truth;
  std::vector<uint8_t> failure;  // predicted != truth
  double failure_rate_percent = 0.0;
};

AttackResult run_attack(const std::vector<Eigen::RowVectorXf>& xtilde,
                        const std::vector<int>& truth, const MatF& table,
                        bool use_mrp, int mrp_r);

// Per-coordinate plug-in mutual information between clean inputs and their
// obfuscations. Rows of xtilde/own_sigma are obfuscation draws with the
// sigma of the generating field; rows of cross_mean/cross_sigma are the
// independently sampled 1-d mixture components (x' + mu', sigma') scored
// against each draw. Marginal entropy is the log of the mean cross density;
// the conditional term is the mean per-draw Gaussian entropy.
struct FeatureMiResult {
  double mean_nats = 0.0;
  double sum_nats = 0.0;
  std::vector<double> per_coordinate;
};

FeatureMiResult feature_mi(const MatD& xtilde, const MatD& own_sigma,
                           const MatD& cross_mean, const MatD& cross_sigma,
                           int min_samples = 1000);

}  // namespace sgt
