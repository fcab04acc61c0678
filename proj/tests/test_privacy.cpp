#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sgt/privacy.hpp"
#include "sgt/rng.hpp"
#include "support/quadrature.hpp"

using sgt::MatD;
using sgt::MatF;
using sgt::RankHistogram;
using sgt::RngStream;

namespace {

MatF line_table(int v) {  // 1-d table {0, 1, ..., v-1}
  MatF t(v, 1);
  for (int k = 0; k < v; ++k) t(k, 0) = static_cast<float>(k);
  return t;
}

Eigen::RowVectorXf point(float x) {
  Eigen::RowVectorXf p(1);
  p << x;
  return p;
}

}  // namespace

TEST_CASE("reconstruction rank hand cases") {
  MatF table(3, 1);
  table << 0.0f, 1.0f, 5.0f;
  // Clean input: zero distance, rank 1.
  CHECK(sgt::reconstruction_rank(point(0.0f), table, 0) == 1);
  // Distances (0.9, 0.1, 4.1): true id 0 is second closest.
  CHECK(sgt::reconstruction_rank(point(0.9f), table, 0) == 2);
  CHECK(sgt::reconstruction_rank(point(0.9f), table, 1) == 1);
  CHECK(sgt::reconstruction_rank(point(0.9f), table, 2) == 3);
  CHECK_THROWS_AS(sgt::reconstruction_rank(point(0.0f), table, 3),
                  std::out_of_range);
  // Ranks stay in [1, |V|] on random probes.
  RngStream rng(1, 0);
  MatF big = sgt::gaussian_draw<float>(rng, 20, 4);
  for (int i = 0; i < 50; ++i) {
    Eigen::RowVectorXf x = sgt::gaussian_draw<float>(rng, 1, 4).row(0) * 3.0f;
    const int r = sgt::reconstruction_rank(x, big,
                                           static_cast<int>(rng.uniform_index(20)));
    CHECK(r >= 1);
    CHECK(r <= 20);
  }
  // Equidistant tie goes to the smaller id.
  MatF sym(2, 1);
  sym << -1.0f, 1.0f;
  CHECK(sgt::reconstruction_rank(point(0.0f), sym, 0) == 1);
  CHECK(sgt::reconstruction_rank(point(0.0f), sym, 1) == 2);
}

TEST_CASE("nn and mrp attacks") {
  MatF table(3, 1);
  table << 0.0f, 1.0f, 5.0f;
  CHECK(sgt::nn_attack(point(0.9f), table) == 1);
  // r = 1: the farthest row (value 5).
  CHECK(sgt::mrp_attack(point(0.9f), table, 1) == 2);
  // r = |V| degenerates to nn.
  RngStream rng(2, 0);
  for (int i = 0; i < 30; ++i) {
    Eigen::RowVectorXf x = point(static_cast<float>(rng.normal() * 3));
    CHECK(sgt::mrp_attack(x, table, 3) == sgt::nn_attack(x, table));
  }
  CHECK_THROWS_AS(sgt::mrp_attack(point(0.0f), table, 0), std::out_of_range);
  CHECK_THROWS_AS(sgt::mrp_attack(point(0.0f), table, 4), std::out_of_range);
  // nn on clean embeddings never fails.
  auto res = sgt::run_attack({point(0.0f), point(1.0f), point(5.0f)},
                             {0, 1, 2}, table, false, 0);
  CHECK(res.failure_rate_percent == 0.0);
}

TEST_CASE("mrp calibration from the rank histogram") {
  RankHistogram far_peak(8);
  for (int i = 0; i < 10; ++i) far_peak.add(8);
  CHECK(sgt::calibrate_mrp(far_peak) == 1);
  // Uniform: mode tie resolves at rank 1, so r = |V|.
  RankHistogram uniform(8);
  for (int r = 1; r <= 8; ++r) uniform.add(r);
  CHECK(sgt::calibrate_mrp(uniform) == 8);
}

TEST_CASE("bimodal rank histogram: calibrated mrp beats nn") {
  // Antipodal-style mechanism over a circle of embeddings: 70% of tokens are
  // sent to the opposite pole (true token near-farthest), 30% stay near the
  // truth. The rank histogram is bimodal with the far peak dominant.
  const int v = 32;
  MatF table(v, 2);
  for (int k = 0; k < v; ++k) {
    const double theta = 2.0 * M_PI * k / v;
    table(k, 0) = static_cast<float>(std::cos(theta));
    table(k, 1) = static_cast<float>(std::sin(theta));
  }
  RngStream rng(3, 0);
  std::vector<Eigen::RowVectorXf> xt;
  std::vector<int> truth;
  RankHistogram calib(v);
  for (int i = 0; i < 4000; ++i) {
    const int id = static_cast<int>(rng.uniform_index(v));
    Eigen::RowVectorXf x = rng.uniform() < 0.7 ? (-table.row(id)).eval()
                                               : table.row(id).eval();
    x(0) += static_cast<float>(rng.normal() * 0.02);
    x(1) += static_cast<float>(rng.normal() * 0.02);
    xt.push_back(x);
    truth.push_back(id);
    calib.add(sgt::reconstruction_rank(x, table, id));
  }
  // Far peak dominates, so the calibrated offset targets it.
  const int r = sgt::calibrate_mrp(calib);
  CHECK(r <= 3);
  auto nn = sgt::run_attack(xt, truth, table, false, 0);
  auto mrp = sgt::run_attack(xt, truth, table, true, r);
  CHECK(mrp.failure_rate_percent < nn.failure_rate_percent);
}

TEST_CASE("ttr and symmetric ttr") {
  RankHistogram h(10);
  for (int r = 1; r <= 10; ++r) h.add(r);  // uniform on {1..10}
  CHECK(sgt::ttr_k(h, 0) == doctest::Approx(100.0));
  CHECK(sgt::ttr_k(h, 2) == doctest::Approx(80.0));
  CHECK(sgt::sym_ttr_k(h, 2) == doctest::Approx(50.0));  // ranks 3..7
  CHECK_THROWS_AS(sgt::sym_ttr_k(h, 5), std::invalid_argument);
  RankHistogram ones(10);
  for (int i = 0; i < 5; ++i) ones.add(1);
  CHECK(sgt::ttr_k(ones, 1) == doctest::Approx(0.0));
  CHECK(sgt::ttr_k(ones, 0) == doctest::Approx(100.0));
  // sym_ttr <= ttr at equal k.
  for (int k = 0; k < 5; ++k) CHECK(sgt::sym_ttr_k(h, k) <= sgt::ttr_k(h, k));
  // nn failure rate is exactly ttr-1.
  const int v = 16;
  MatF table = line_table(v);
  RngStream rng(4, 0);
  RankHistogram rh(v);
  std::vector<Eigen::RowVectorXf> xt;
  std::vector<int> truth;
  for (int i = 0; i < 500; ++i) {
    const int id = static_cast<int>(rng.uniform_index(v));
    const float x = static_cast<float>(id + rng.normal() * 1.5);
    xt.push_back(point(x));
    truth.push_back(id);
    rh.add(sgt::reconstruction_rank(point(x), table, id));
  }
  auto nn = sgt::run_attack(xt, truth, table, false, 0);
  CHECK(nn.failure_rate_percent == doctest::Approx(sgt::ttr_k(rh, 1)));
}

TEST_CASE("histogram entropy percent") {
  RankHistogram uniform(6);
  for (int r = 1; r <= 6; ++r) uniform.add(r);
  CHECK(sgt::hist_entropy_percent(uniform) == doctest::Approx(100.0));
  RankHistogram peak(6);
  for (int i = 0; i < 9; ++i) peak.add(3);
  CHECK(sgt::hist_entropy_percent(peak) == doctest::Approx(0.0));
  RankHistogram two(4);
  two.add(1);
  two.add(4);
  CHECK(sgt::hist_entropy_percent(two) == doctest::Approx(50.0));
}

TEST_CASE("pac bound inversion matches published operating points") {
  // Prior-only adversary.
  CHECK(sgt::pac_adv(0.0, 128256) ==
        doctest::Approx(100.0 / 128256).epsilon(1e-9));
  // Loss-ablation operating points at |V| = 128256.
  CHECK(sgt::pac_adv(1.11, 128256) == doctest::Approx(12.69).epsilon(0.004));
  CHECK(sgt::pac_adv(1.48, 128256) == doctest::Approx(16.39).epsilon(0.004));
  // Large-model operating points.
  CHECK(sgt::pac_adv(0.26, 128256) == doctest::Approx(3.54).epsilon(0.015));
  CHECK(sgt::pac_adv(0.28, 128256) == doctest::Approx(3.74).epsilon(0.015));
  // Saturation at mi >= log n.
  CHECK(sgt::pac_adv(std::log(128256.0) + 0.01, 128256) == 100.0);
  CHECK(sgt::pac_adv(50.0, 128256) == 100.0);
  CHECK_THROWS_AS(sgt::pac_adv(-0.1, 100), std::invalid_argument);
}

TEST_CASE("pac bound is monotone in mi and in n") {
  double prev = 0.0;
  for (double mi : {0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 11.0}) {
    const double v = sgt::pac_adv(mi, 128256);
    CHECK(v >= prev - 1e-9);
    prev = v;
  }
  double prev_n = 101.0;
  for (int64_t n : {int64_t(16), int64_t(256), int64_t(4096),
                    int64_t(128256)}) {
    const double v = sgt::pac_adv(1.0, n);
    CHECK(v <= prev_n + 1e-9);
    prev_n = v;
  }
}

TEST_CASE("feature mi: constant input gives zero") {
  const int n = 20000;
  RngStream rng(5, 0);
  MatD xt(n, 1), own(n, 1);
  for (int i = 0; i < n; ++i) {
    xt(i, 0) = 0.7 + 1.3 * rng.normal();
    own(i, 0) = 1.3;
  }
  MatD cm = MatD::Constant(64, 1, 0.7), cs = MatD::Constant(64, 1, 1.3);
  auto res = sgt::feature_mi(xt, own, cm, cs);
  CHECK(std::abs(res.mean_nats) < 0.02);
}

TEST_CASE("feature mi: separated two-component mixture is log 2") {
  sgt::testsupport::Gmm1d g{{-10.0, 10.0}, {1.0, 1.0}, {0.5, 0.5}};
  const double oracle = sgt::testsupport::gmm_mi_quadrature(g);
  CHECK(oracle == doctest::Approx(std::log(2.0)).epsilon(1e-6));
  const int n = 100000;
  RngStream rng(6, 0);
  MatD xt(n, 1), own(n, 1);
  for (int i = 0; i < n; ++i) {
    const int k = rng.uniform() < 0.5 ? 0 : 1;
    xt(i, 0) = g.means[k] + g.sigmas[k] * rng.normal();
    own(i, 0) = g.sigmas[k];
  }
  MatD cm(2, 1), cs(2, 1);
  cm << -10.0, 10.0;
  cs << 1.0, 1.0;
  auto res = sgt::feature_mi(xt, own, cm, cs);
  CHECK(std::abs(res.mean_nats - oracle) < 1e-2);
}

TEST_CASE("feature mi: identical component means give zero") {
  const int n = 20000;
  RngStream rng(7, 0);
  MatD xt(n, 1), own(n, 1);
  for (int i = 0; i < n; ++i) {
    const double sigma = rng.uniform() < 0.5 ? 0.8 : 0.8;
    xt(i, 0) = sigma * rng.normal();
    own(i, 0) = sigma;
  }
  MatD cm = MatD::Zero(2, 1), cs = MatD::Constant(2, 1, 0.8);
  auto res = sgt::feature_mi(xt, own, cm, cs);
  CHECK(std::abs(res.mean_nats) < 0.02);
}

TEST_CASE("feature mi agrees with quadrature on multi-component mixtures") {
  for (uint64_t seed : {11u, 12u}) {
    RngStream cfg_rng(seed, 0);
    sgt::testsupport::Gmm1d g;
    const int k = 3 + static_cast<int>(cfg_rng.uniform_index(2));
    std::vector<int> units(k, 1);
    int left = 16 - k;
    while (left > 0) {
      units[cfg_rng.uniform_index(k)] += 1;
      --left;
    }
    for (int c = 0; c < k; ++c) {
      g.means.push_back(-10.0 + 20.0 * cfg_rng.uniform());
      g.sigmas.push_back(0.5 + 1.5 * cfg_rng.uniform());
      g.weights.push_back(units[c] / 16.0);
    }
    const double oracle = sgt::testsupport::gmm_mi_quadrature(g);
    const int n = 100000;
    RngStream rng(seed, 1);
    MatD xt(n, 1), own(n, 1);
    for (int i = 0; i < n; ++i) {
      const double u = rng.uniform();
      double acc = 0.0;
      size_t comp = 0;
      for (; comp + 1 < g.weights.size(); ++comp) {
        acc += g.weights[comp];
        if (u < acc) break;
      }
      xt(i, 0) = g.means[comp] + g.sigmas[comp] * rng.normal();
      own(i, 0) = g.sigmas[comp];
    }
    MatD cm(16, 1), cs(16, 1);
    int at = 0;
    for (int c = 0; c < k; ++c)
      for (int u = 0; u < units[c]; ++u) {
        cm(at, 0) = g.means[c];
        cs(at, 0) = g.sigmas[c];
        ++at;
      }
    auto res = sgt::feature_mi(xt, own, cm, cs);
    CAPTURE(seed);
    CHECK(std::abs(res.mean_nats - oracle) / std::abs(oracle) < 0.02);
  }
}

TEST_CASE("feature mi enforces the sample-count minimum") {
  MatD xt = MatD::Zero(10, 1), own = MatD::Ones(10, 1);
  MatD cm = MatD::Zero(2, 1), cs = MatD::Ones(2, 1);
  CHECK_THROWS_AS(sgt::feature_mi(xt, own, cm, cs, 1000),
                  std::invalid_argument);
}
