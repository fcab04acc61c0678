#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "sgt/estimator.hpp"
#include "support/quadrature.hpp"

using sgt::GaussianField;
using sgt::Mat;
using sgt::MatF;
using sgt::RngStream;
using sgt::SgtEstimator;
using sgt::SgtEstimatorConfig;

namespace {

SgtEstimatorConfig small_config(int dim = 8, int heads = 2) {
  SgtEstimatorConfig cfg;
  cfg.dim = dim;
  cfg.heads = heads;
  cfg.context = 8;
  return cfg;
}

SgtEstimator<float> small_estimator(uint64_t seed, int dim = 8,
                                    int heads = 2) {
  RngStream rng(seed, 0);
  return SgtEstimator<float>::init(small_config(dim, heads), 1.0f, rng);
}

}  // namespace

TEST_CASE("field shapes follow the input and sigma is positive") {
  auto e = small_estimator(1);
  RngStream rng(2, 0);
  MatF x = sgt::gaussian_draw<float>(rng, 5, 8);
  GaussianField f = sgt::estimate_field(e, x);
  CHECK(f.mu.rows() == 5);
  CHECK(f.mu.cols() == 8);
  CHECK(f.sigma.rows() == 5);
  CHECK((f.sigma.array() > 0).all());
  // T = 1 degenerates to a per-token map.
  GaussianField f1 = sgt::estimate_field(e, MatF(x.topRows(1)));
  CHECK(f1.mu.rows() == 1);
  MatF bad(3, 5);
  bad.setZero();
  CHECK_THROWS_AS(sgt::estimate_field(e, bad), std::invalid_argument);
}

TEST_CASE("mean head starts at zero and sigma at the configured scale") {
  SgtEstimatorConfig cfg = small_config();
  RngStream rng(3, 0);
  const float median_norm = 2.0f;
  auto e = SgtEstimator<float>::init(cfg, median_norm, rng);
  RngStream rng2(4, 0);
  MatF x = sgt::gaussian_draw<float>(rng2, 4, 8);
  GaussianField f = sgt::estimate_field(e, x);
  CHECK(f.mu.cwiseAbs().maxCoeff() == 0.0f);
  const float sigma0 = cfg.sigma_init_frac * median_norm / std::sqrt(8.0f);
  CHECK(f.sigma.minCoeff() == doctest::Approx(sigma0).epsilon(1e-5));
  CHECK(f.sigma.maxCoeff() == doctest::Approx(sigma0).epsilon(1e-5));
}

TEST_CASE("adversarially large head outputs stay inside the sigma clamp") {
  auto e = small_estimator(5);
  e.w_s.value.setConstant(50.0f);
  e.b_s.value.setConstant(100.0f);
  RngStream rng(6, 0);
  MatF x = sgt::gaussian_draw<float>(rng, 4, 8);
  GaussianField f = sgt::estimate_field(e, x);
  CHECK(f.sigma.maxCoeff() <= std::exp(e.config.log_sigma_max) * 1.0001f);
  e.b_s.value.setConstant(-100.0f);
  e.w_s.value.setZero();
  f = sgt::estimate_field(e, x);
  CHECK(f.sigma.minCoeff() >= std::exp(e.config.log_sigma_min) * 0.9999f);
}

TEST_CASE("the architecture has cross-position paths (jacobian nonzero)") {
  // Structural check at random init: gradient of mu at position 2 w.r.t. the
  // input at position 0 is nonzero for some coordinate.
  auto e = small_estimator(7);
  // Nonzero mean head so the path to mu is live.
  RngStream hr(8, 0);
  e.w_mu.value = sgt::gaussian_draw<float>(hr, 8, 8) * 0.3f;
  sgt::ad::Tape<float> tape;
  auto vars = sgt::bind(tape, e, /*trainable=*/false);
  RngStream rng(9, 0);
  auto x = tape.leaf(sgt::gaussian_draw<float>(rng, 3, 8));
  auto f = sgt::estimate_field_ad(tape, e, vars, x);
  // Probe: sum of mu over position 2 only.
  MatF mask = MatF::Zero(3, 8);
  mask.row(2).setOnes();
  auto probe = sgt::ad::sum_all(sgt::ad::mul(f.mu, tape.constant(mask)));
  tape.backward(probe);
  MatF g = tape.grad(x);
  CHECK(g.row(0).cwiseAbs().maxCoeff() > 0.0f);
}

TEST_CASE("sampling: determinism, vanishing noise, exact identity") {
  auto e = small_estimator(10);
  RngStream rng(11, 0);
  MatF x = sgt::gaussian_draw<float>(rng, 4, 8);

  RngStream s1(12, 5), s2(12, 5);
  auto o1 = sgt::sample_sgt(e, x, s1);
  auto o2 = sgt::sample_sgt(e, x, s2);
  CHECK(std::memcmp(o1.obfuscated.data(), o2.obfuscated.data(),
                    sizeof(float) * o1.obfuscated.size()) == 0);

  // Exact reconstruction identity, recomputed in the same expression order.
  MatF rhs = o1.clean + o1.mu + o1.sigma.cwiseProduct(o1.noise);
  CHECK(std::memcmp(o1.obfuscated.data(), rhs.data(),
                    sizeof(float) * rhs.size()) == 0);

  // Vanishing noise limit: mu == 0, sigma == 1e-8.
  SgtEstimatorConfig cfg = small_config();
  cfg.log_sigma_min = std::log(1e-8f);
  cfg.sigma_init_frac = 0.0f;  // floors sigma0 at exp(log_sigma_min)
  RngStream rng2(13, 0);
  auto tiny = SgtEstimator<float>::init(cfg, 1.0f, rng2);
  RngStream s3(14, 0);
  auto o3 = sgt::sample_sgt(tiny, x, s3);
  CHECK((o3.obfuscated - x).cwiseAbs().maxCoeff() < 1e-6f);
}

TEST_CASE("empirical moments of xtilde - x match the field within 1%") {
  auto e = small_estimator(15);
  RngStream hr(16, 0);
  e.w_mu.value = sgt::gaussian_draw<float>(hr, 8, 8) * 0.2f;
  e.w_s.value = sgt::gaussian_draw<float>(hr, 8, 8) * 0.1f;
  RngStream rng(17, 0);
  MatF x = sgt::gaussian_draw<float>(rng, 2, 8);
  GaussianField f = sgt::estimate_field(e, x);

  const int n = 100000;
  sgt::MatD sum = sgt::MatD::Zero(2, 8), sumsq = sgt::MatD::Zero(2, 8);
  RngStream draw(18, 0);
  for (int i = 0; i < n; ++i) {
    MatF noise = sgt::gaussian_draw<float>(draw, 2, 8);
    sgt::MatD delta =
        (f.mu + f.sigma.cwiseProduct(noise)).cast<double>();
    sum += delta;
    sumsq += delta.cwiseProduct(delta);
  }
  sgt::MatD mean = sum / n;
  sgt::MatD std =
      (sumsq / n - mean.cwiseProduct(mean)).cwiseSqrt();
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 8; ++c) {
      CHECK(std::abs(mean(r, c) - f.mu(r, c)) < 0.01 * f.sigma(r, c));
      CHECK(std::abs(std(r, c) - f.sigma(r, c)) < 0.01 * f.sigma(r, c));
    }
}

TEST_CASE("conditional log density closed-form values") {
  // d=1, T=1, sigma=1, at the mean: -log sqrt(2 pi).
  MatF x(1, 1), xt(1, 1);
  x << 0.3f;
  GaussianField f;
  f.mu = MatF::Constant(1, 1, 0.2f);
  f.sigma = MatF::Constant(1, 1, 1.0f);
  xt << 0.5f;  // x + mu
  CHECK(sgt::conditional_log_density(xt, x, f) ==
        doctest::Approx(-0.9189385).epsilon(1e-6));

  // d=2: sigma=(2,2), residual (2,0): -log(2 pi) - log 4 - 1/2.
  MatF x2(1, 2), xt2(1, 2);
  x2 << 1.0f, -1.0f;
  GaussianField f2;
  f2.mu = MatF::Zero(1, 2);
  f2.sigma = MatF::Constant(1, 2, 2.0f);
  xt2 << 3.0f, -1.0f;
  CHECK(sgt::conditional_log_density(xt2, x2, f2) ==
        doctest::Approx(-3.7241714).epsilon(1e-6));

  // Symmetry about the mean.
  MatF plus = x2 + f2.mu;
  plus(0, 0) += 0.75f;
  MatF minus = x2 + f2.mu;
  minus(0, 0) -= 0.75f;
  CHECK(sgt::conditional_log_density(plus, x2, f2) ==
        sgt::conditional_log_density(minus, x2, f2));

  // Nonpositive sigma is an error.
  f2.sigma(0, 0) = 0.0f;
  CHECK_THROWS_AS(sgt::conditional_log_density(xt2, x2, f2),
                  std::invalid_argument);

  // Positions sum: T=2 equals the sum of two T=1 terms.
  MatF x3(2, 1), xt3(2, 1);
  x3 << 0.0f, 1.0f;
  xt3 << 0.4f, 0.8f;
  GaussianField f3;
  f3.mu = MatF::Zero(2, 1);
  f3.sigma = MatF::Constant(2, 1, 0.5f);
  GaussianField top{f3.mu.topRows(1), f3.sigma.topRows(1)};
  GaussianField bot{f3.mu.bottomRows(1), f3.sigma.bottomRows(1)};
  CHECK(sgt::conditional_log_density(xt3, x3, f3) ==
        doctest::Approx(
            sgt::conditional_log_density(MatF(xt3.topRows(1)),
                                         MatF(x3.topRows(1)), top) +
            sgt::conditional_log_density(MatF(xt3.bottomRows(1)),
                                         MatF(x3.bottomRows(1)), bot)));
}

TEST_CASE("sgt checkpoint round-trip is bit-exact and checksummed") {
  auto e = small_estimator(20);
  RngStream hr(21, 0);
  e.w_mu.value = sgt::gaussian_draw<float>(hr, 8, 8) * 0.2f;
  sgt::SgtBundle bundle;
  bundle.estimator = e;
  bundle.embedding = sgt::gaussian_draw<float>(hr, 16, 8);
  bundle.tokenizer_mode = "byte";
  bundle.extra["dataset_sha256"] = "deadbeef";
  const auto path =
      (std::filesystem::temp_directory_path() / "sgt_est_ckpt.bin").string();
  sgt::save_sgt(path, bundle);
  auto loaded = sgt::load_sgt(path);
  CHECK(sgt::parameter_hash(loaded.estimator) == sgt::parameter_hash(e));
  CHECK(loaded.embedding == bundle.embedding);
  CHECK(loaded.extra.at("dataset_sha256") == "deadbeef");

  // Identical field on a probe batch.
  RngStream rng(22, 0);
  MatF x = sgt::gaussian_draw<float>(rng, 3, 8);
  GaussianField fa = sgt::estimate_field(e, x);
  GaussianField fb = sgt::estimate_field(loaded.estimator, x);
  CHECK(std::memcmp(fa.mu.data(), fb.mu.data(), sizeof(float) * fa.mu.size()) ==
        0);
  CHECK(std::memcmp(fa.sigma.data(), fb.sigma.data(),
                    sizeof(float) * fa.sigma.size()) == 0);

  // Corrupt magic: version error.
  {
    std::fstream fh(path, std::ios::in | std::ios::out | std::ios::binary);
    fh.seekp(0);
    fh.write("BAD!", 4);
  }
  CHECK_THROWS_WITH_AS(sgt::load_sgt(path), doctest::Contains("version error"),
                       std::runtime_error);
  // Restore magic but corrupt one payload byte: checksum mismatch.
  {
    std::fstream fh(path, std::ios::in | std::ios::out | std::ios::binary);
    fh.seekp(0);
    fh.write("SGTS", 4);
    fh.seekp(-1, std::ios::end);
    char c;
    fh.seekg(-1, std::ios::end);
    fh.read(&c, 1);
    c ^= 0x40;
    fh.seekp(-1, std::ios::end);
    fh.write(&c, 1);
  }
  CHECK_THROWS_WITH_AS(sgt::load_sgt(path), doctest::Contains("checksum"),
                       std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("obfuscations of a degenerate corpus follow the mixture law") {
  // Three distinct 1-d single-token inputs with weights (0.5, 0.3, 0.2).
  SgtEstimatorConfig cfg;
  cfg.dim = 1;
  cfg.heads = 1;
  cfg.context = 1;
  RngStream rng(23, 0);
  auto e = SgtEstimator<float>::init(cfg, 1.0f, rng);
  // Randomize the heads so the per-component fields differ.
  RngStream hr(24, 0);
  e.w_mu.value = sgt::gaussian_draw<float>(hr, 1, 1) * 0.5f;
  e.b_mu.value = sgt::gaussian_draw<float>(hr, 1, 1) * 0.3f;
  e.w_s.value = sgt::gaussian_draw<float>(hr, 1, 1) * 0.5f;

  const std::vector<double> xs = {-1.0, 0.2, 1.4};
  const std::vector<double> ws = {0.5, 0.3, 0.2};
  sgt::testsupport::Gmm1d oracle;
  for (size_t k = 0; k < xs.size(); ++k) {
    MatF x(1, 1);
    x(0, 0) = static_cast<float>(xs[k]);
    GaussianField f = sgt::estimate_field(e, x);
    oracle.means.push_back(xs[k] + f.mu(0, 0));
    oracle.sigmas.push_back(f.sigma(0, 0));
    oracle.weights.push_back(ws[k]);
  }

  const int n = 100000;
  std::vector<double> samples;
  samples.reserve(n);
  RngStream draw(25, 0);
  for (int i = 0; i < n; ++i) {
    const double u = draw.uniform();
    const size_t k = u < ws[0] ? 0 : (u < ws[0] + ws[1] ? 1 : 2);
    MatF x(1, 1);
    x(0, 0) = static_cast<float>(xs[k]);
    auto o = sgt::sample_sgt(e, x, draw);
    samples.push_back(o.obfuscated(0, 0));
  }
  double lo, hi;
  oracle.support(lo, hi);
  const double l1 =
      sgt::testsupport::histogram_l1_distance(samples, oracle, lo, hi, 80);
  CHECK(l1 < 0.05);
}
