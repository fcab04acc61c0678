#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sgt/ad.hpp"
#include "sgt/grad_check.hpp"
#include "sgt/rng.hpp"

using sgt::Mat;
using sgt::Parameter;
namespace ad = sgt::ad;

namespace {

// Runs grad_check over a scalar-valued tape program built from a parameter.
template <typename Builder>
double op_grad_error(Builder&& build, Eigen::Index rows, Eigen::Index cols,
                     uint64_t seed, double shift = 0.0) {
  sgt::RngStream rng(seed, 0);
  Parameter<double> p("p", sgt::gaussian_draw<double>(rng, rows, cols)
                               .array() +
                           shift);
  auto loss = [&] {
    ad::Tape<double> tape;
    auto v = tape.param(p);
    auto out = build(tape, v);
    tape.backward(out);
    return out.scalar();
  };
  return sgt::grad_check<double>(loss, {&p}, 1e-5, 1e-6).max_rel_error;
}

}  // namespace

TEST_CASE("elementwise op gradients match finite differences") {
  auto via_mean = [](auto f) {
    return [f](ad::Tape<double>& t, ad::Var<double> v) {
      return ad::mean_all(f(t, v));
    };
  };
  CHECK(op_grad_error(via_mean([](auto&, auto v) { return ad::square(v); }), 3,
                      4, 1) < 1e-7);
  CHECK(op_grad_error(via_mean([](auto&, auto v) { return ad::exp(v); }), 3, 4,
                      2) < 1e-7);
  CHECK(op_grad_error(via_mean([](auto&, auto v) { return ad::gelu(v); }), 3,
                      4, 21) < 1e-7);
  CHECK(op_grad_error(via_mean([](auto&, auto v) { return ad::log(v); }), 3, 4,
                      3, 5.0) < 1e-7);
  CHECK(op_grad_error(via_mean([](auto&, auto v) { return ad::sqrt(v); }), 3,
                      4, 4, 5.0) < 1e-7);
  CHECK(op_grad_error(via_mean([](auto&, auto v) {
          return ad::mul(v, ad::add_scalar(v, 2.0));
        }),
                      3, 4, 5) < 1e-7);
  CHECK(op_grad_error(via_mean([](auto&, auto v) {
          return ad::div(v, ad::add_scalar(ad::square(v), 1.0));
        }),
                      3, 4, 6) < 1e-7);
}

TEST_CASE("matmul / transpose / stack gradients") {
  CHECK(op_grad_error(
            [](ad::Tape<double>& t, ad::Var<double> v) {
              Mat<double> w(4, 2);
              w << 1, 2, -1, 0.5, 3, -2, 0.25, 1;
              auto c = t.constant(w);
              return ad::mean_all(ad::square(ad::matmul(v, c)));
            },
            3, 4, 7) < 1e-7);
  CHECK(op_grad_error(
            [](ad::Tape<double>&, ad::Var<double> v) {
              return ad::mean_all(ad::matmul(v, ad::transpose(v)));
            },
            3, 4, 8) < 1e-7);
  CHECK(op_grad_error(
            [](ad::Tape<double>&, ad::Var<double> v) {
              auto a = ad::slice_cols(v, 0, 2);
              auto b = ad::slice_cols(v, 2, 2);
              return ad::mean_all(
                  ad::square(ad::hstack<double>({b, ad::mul(a, b)})));
            },
            3, 4, 9) < 1e-7);
  CHECK(op_grad_error(
            [](ad::Tape<double>&, ad::Var<double> v) {
              return ad::mean_all(ad::square(
                  ad::vstack<double>({v, ad::scale(v, 2.0)})));
            },
            3, 4, 10) < 1e-7);
}

TEST_CASE("softmax and rmsnorm gradients") {
  CHECK(op_grad_error(
            [](ad::Tape<double>& t, ad::Var<double> v) {
              Mat<double> w = Mat<double>::Identity(4, 4);
              w(1, 2) = 0.3;
              return ad::mean_all(
                  ad::square(ad::matmul(ad::softmax_rows(v), t.constant(w))));
            },
            4, 4, 11) < 1e-7);
  CHECK(op_grad_error(
            [](ad::Tape<double>&, ad::Var<double> v) {
              return ad::mean_all(ad::square(ad::softmax_rows(v, true)));
            },
            4, 4, 12) < 1e-7);
  CHECK(op_grad_error(
            [](ad::Tape<double>& t, ad::Var<double> v) {
              Mat<double> w(5, 2);
              w << 1, -2, 0.5, 3, 2, 1, -1, 0.25, 0.75, -0.5;
              auto h = ad::matmul(ad::rmsnorm_rows(v), t.constant(w));
              return ad::mean_all(ad::square(h));
            },
            3, 5, 13) < 1e-7);
}

TEST_CASE("gather and bias gradients") {
  CHECK(op_grad_error(
            [](ad::Tape<double>&, ad::Var<double> v) {
              auto g = ad::gather_rows(v, {2, 0, 2, 1});
              return ad::mean_all(ad::square(g));
            },
            3, 4, 14) < 1e-7);
  CHECK(op_grad_error(
            [](ad::Tape<double>& t, ad::Var<double> v) {
              Mat<double> m = Mat<double>::Constant(5, 4, 0.5);
              auto bias = ad::transpose(ad::slice_cols(ad::transpose(v), 0, 1));
              return ad::mean_all(
                  ad::square(ad::add_rowvec(t.constant(m), bias)));
            },
            4, 4, 15) < 1e-7);
}

TEST_CASE("cross entropy gradients") {
  CHECK(op_grad_error(
            [](ad::Tape<double>&, ad::Var<double> v) {
              return ad::softmax_xent_rows(v, {1, 3, 0}, -1);
            },
            3, 4, 16) < 1e-7);
  CHECK(op_grad_error(
            [](ad::Tape<double>&, ad::Var<double> v) {
              Mat<double> p(3, 4);
              p << 0.1, 0.2, 0.3, 0.4, 0.25, 0.25, 0.25, 0.25, 0.7, 0.1, 0.1,
                  0.1;
              return ad::xent_vs_probs(v, p);
            },
            3, 4, 17) < 1e-7);
}

TEST_CASE("clamp blocks gradient outside the interior") {
  Parameter<double> p("p", Mat<double>::Constant(1, 3, 0.0));
  p.value(0, 0) = -2.0;  // below lo
  p.value(0, 1) = 0.5;   // interior
  p.value(0, 2) = 2.0;   // above hi
  ad::Tape<double> tape;
  auto v = tape.param(p);
  auto out = ad::sum_all(ad::clamp(v, -1.0, 1.0));
  tape.backward(out);
  CHECK(p.grad(0, 0) == 0.0);
  CHECK(p.grad(0, 1) == 1.0);
  CHECK(p.grad(0, 2) == 0.0);
}

TEST_CASE("grad_check quadratic loss: analytic gradient is theta") {
  sgt::RngStream rng(7, 0);
  Parameter<double> theta("theta", sgt::gaussian_draw<double>(rng, 4, 3));
  auto loss = [&] {
    ad::Tape<double> tape;
    auto v = tape.param(theta);
    auto out = ad::scale(ad::sum_all(ad::square(v)), 0.5);
    tape.backward(out);
    return out.scalar();
  };
  auto report = sgt::grad_check<double>(loss, {&theta}, 1e-3, 1e-6);
  CHECK(report.max_rel_error < 1e-6);
  CHECK((theta.grad - theta.value).norm() < 1e-12);
}

TEST_CASE("grad_check constant loss: gradient uniformly zero") {
  Parameter<double> theta("theta", Mat<double>::Constant(2, 2, 3.0));
  auto loss = [&] {
    ad::Tape<double> tape;
    auto v = tape.param(theta);
    auto out = ad::mean_all(ad::scale(v, 0.0));
    tape.backward(out);
    return out.scalar();
  };
  auto report = sgt::grad_check<double>(loss, {&theta}, 1e-3, 1e-6);
  CHECK(report.max_rel_error == 0.0);
  CHECK(theta.grad.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("grad_check detects a non-deterministic loss") {
  Parameter<double> theta("theta", Mat<double>::Constant(1, 1, 1.0));
  int calls = 0;
  auto loss = [&] {
    ++calls;
    return static_cast<double>(calls);  // changes every evaluation
  };
  CHECK_THROWS_AS(sgt::grad_check<double>(loss, {&theta}, 1e-3, 1e-6),
                  std::runtime_error);
}

TEST_CASE("shared subexpressions accumulate gradient once per path") {
  Parameter<double> p("p", Mat<double>::Constant(1, 1, 3.0));
  ad::Tape<double> tape;
  auto v = tape.param(p);
  auto out = ad::sum_all(ad::add(ad::square(v), ad::scale(v, 4.0)));
  tape.backward(out);
  CHECK(p.grad(0, 0) == doctest::Approx(2.0 * 3.0 + 4.0));
}

TEST_CASE("backward requires a scalar root") {
  ad::Tape<double> tape;
  auto v = tape.leaf(Mat<double>::Ones(2, 2));
  CHECK_THROWS_AS(tape.backward(v), std::logic_error);
}
