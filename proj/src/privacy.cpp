#include "sgt/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sgt {

void RankHistogram::add(int rank) {
  if (rank < 1 || rank > vocab())
    throw std::out_of_range("rank histogram: rank out of [1, |V|]");
  ++counts[rank - 1];
  ++total;
}

int reconstruction_rank(const Eigen::RowVectorXf& xtilde, const MatF& table,
                        int true_id) {
  const int v = static_cast<int>(table.rows());
  if (true_id < 0 || true_id >= v)
    throw std::out_of_range("reconstruction_rank: invalid true id");
  const float d_true = (table.row(true_id) - xtilde).squaredNorm();
  int rank = 1;
  for (int k = 0; k < v; ++k) {
    if (k == true_id) continue;
    const float d = (table.row(k) - xtilde).squaredNorm();
    if (d < d_true || (d == d_true && k < true_id)) ++rank;
  }
  return rank;
}

int nn_attack(const Eigen::RowVectorXf& xtilde, const MatF& table) {
  int best = 0;
  float best_d = (table.row(0) - xtilde).squaredNorm();
  for (int k = 1; k < table.rows(); ++k) {
    const float d = (table.row(k) - xtilde).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

int mrp_attack(const Eigen::RowVectorXf& xtilde, const MatF& table, int r) {
  const int v = static_cast<int>(table.rows());
  if (r < 1 || r > v) throw std::out_of_range("mrp_attack: r out of [1, |V|]");
  std::vector<std::pair<float, int>> dist(v);
  for (int k = 0; k < v; ++k)
    dist[k] = {(table.row(k) - xtilde).squaredNorm(), k};
  const int pos = v - r;  // 0-based ascending index of the r-th farthest
  std::nth_element(dist.begin(), dist.begin() + pos, dist.end());
  return dist[pos].second;
}

int calibrate_mrp(const RankHistogram& hist) {
  if (hist.total <= 0)
    throw std::invalid_argument("calibrate_mrp: empty histogram");
  int mode_rank = 1;
  int64_t best = -1;
  for (int r = 1; r <= hist.vocab(); ++r) {
    if (hist.counts[r - 1] > best) {
      best = hist.counts[r - 1];
      mode_rank = r;
    }
  }
  return hist.vocab() - mode_rank + 1;
}

double ttr_k(const RankHistogram& hist, int k) {
  if (hist.total <= 0) throw std::invalid_argument("ttr_k: empty histogram");
  if (k < 0) throw std::invalid_argument("ttr_k: k must be >= 0");
  int64_t above = 0;
  for (int r = k + 1; r <= hist.vocab(); ++r) above += hist.counts[r - 1];
  return 100.0 * static_cast<double>(above) /
         static_cast<double>(hist.total);
}

double sym_ttr_k(const RankHistogram& hist, int k) {
  if (hist.total <= 0)
    throw std::invalid_argument("sym_ttr_k: empty histogram");
  if (k < 0 || 2 * k >= hist.vocab())
    throw std::invalid_argument("sym_ttr_k: need 0 <= k < |V|/2");
  int64_t inside = 0;
  for (int r = k + 1; r < hist.vocab() - k; ++r) inside += hist.counts[r - 1];
  return 100.0 * static_cast<double>(inside) /
         static_cast<double>(hist.total);
}

double hist_entropy_percent(const RankHistogram& hist) {
  if (hist.total <= 0)
    throw std::invalid_argument("hist_entropy: empty histogram");
  double h = 0.0;
  for (int64_t c : hist.counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(hist.total);
    h -= p * std::log(p);
  }
  return 100.0 * h / std::log(static_cast<double>(hist.vocab()));
}

double pac_adv(double mi_nats, int64_t n) {
  if (mi_nats < 0) throw std::invalid_argument("pac_adv: negative mi");
  if (n < 2) throw std::invalid_argument("pac_adv: n must be >= 2");
  const double log_n = std::log(static_cast<double>(n));
  if (mi_nats >= log_n) return 100.0;
  const double delta0 = 1.0 - 1.0 / static_cast<double>(n);
  if (mi_nats == 0.0) return 100.0 * (1.0 - delta0);
  // kl(delta) falls monotonically from log n (delta -> 0) to 0 (delta0).
  auto kl = [&](double delta) {
    return delta * std::log(delta / delta0) +
           (1.0 - delta) * std::log((1.0 - delta) / (1.0 - delta0));
  };
  double lo = 1e-300, hi = delta0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (kl(mid) > mi_nats)
      lo = mid;
    else
      hi = mid;
  }
  return 100.0 * (1.0 - 0.5 * (lo + hi));
}

AttackResult run_attack(const std::vector<Eigen::RowVectorXf>& xtilde,
                        const std::vector<int>& truth, const MatF& table,
                        bool use_mrp, int mrp_r) {
  if (xtilde.size() != truth.size())
    throw std::invalid_argument("run_attack: size mismatch");
  AttackResult res;
  res.truth = truth;
  int64_t failures = 0;
  for (size_t i = 0; i < xtilde.size(); ++i) {
    const int pred = use_mrp ? mrp_attack(xtilde[i], table, mrp_r)
                             : nn_attack(xtilde[i], table);
    res.predicted.push_back(pred);
    const bool fail = pred != truth[i];
    res.failure.push_back(fail ? 1 : 0);
    failures += fail;
  }
  res.failure_rate_percent =
      100.0 * static_cast<double>(failures) /
      static_cast<double>(std::max<size_t>(1, xtilde.size()));
  return res;
}

FeatureMiResult feature_mi(const MatD& xtilde, const MatD& own_sigma,
                           const MatD& cross_mean, const MatD& cross_sigma,
                           int min_samples) {
  const Eigen::Index n = xtilde.rows();
  const Eigen::Index d = xtilde.cols();
  const Eigen::Index m = cross_mean.rows();
  if (own_sigma.rows() != n || own_sigma.cols() != d ||
      cross_mean.cols() != d || cross_sigma.rows() != m ||
      cross_sigma.cols() != d)
    throw std::invalid_argument("feature_mi: shape mismatch");
  if (n < min_samples || m < 1)
    throw std::invalid_argument("feature_mi: sample count below minimum");
  if ((own_sigma.array() <= 0).any() || (cross_sigma.array() <= 0).any())
    throw std::invalid_argument("feature_mi: nonpositive sigma");

  constexpr double kHalfLog2Pi = 0.9189385332046727;
  FeatureMiResult out;
  out.per_coordinate.resize(d);
  const Eigen::Index block = 4096;
  for (Eigen::Index j = 0; j < d; ++j) {
    // Conditional term: mean Gaussian entropy of the generating components.
    const double h_cond =
        kHalfLog2Pi + 0.5 + own_sigma.col(j).array().log().mean();
    // Marginal term: -log of the mean cross density, block-evaluated.
    const Eigen::ArrayXd cm = cross_mean.col(j).array();
    const Eigen::ArrayXd cs = cross_sigma.col(j).array();
    const Eigen::ArrayXd log_norm = -cs.log() - kHalfLog2Pi;
    double h_marg_sum = 0.0;
    for (Eigen::Index at = 0; at < n; at += block) {
      const Eigen::Index len = std::min(block, n - at);
      const Eigen::ArrayXd z = xtilde.col(j).segment(at, len).array();
      MatD lp(len, m);
      for (Eigen::Index l = 0; l < m; ++l) {
        lp.col(l) = log_norm(l) -
                    0.5 * ((z - cm(l)) / cs(l)).square();
      }
      const Eigen::ArrayXd row_max = lp.rowwise().maxCoeff().array();
      const Eigen::ArrayXd lse =
          ((lp.array().colwise() - row_max).exp().rowwise().sum()).log() +
          row_max;
      h_marg_sum += (std::log(static_cast<double>(m)) - lse).sum();
    }
    const double h_marg = h_marg_sum / static_cast<double>(n);
    out.per_coordinate[j] = h_marg - h_cond;
    out.sum_nats += out.per_coordinate[j];
  }
  out.mean_nats = out.sum_nats / static_cast<double>(d);
  return out;
}

}  // namespace sgt
