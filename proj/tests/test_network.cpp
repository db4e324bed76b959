#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ntklab/network.hpp"
#include "ntklab/rng.hpp"

using namespace ntklab;

namespace {

Network random_net(int m, int d, std::uint64_t seed,
                   InitScheme scheme = InitScheme::iid) {
  return init_network(m, d, InitFamily::gaussian, scheme, seed);
}

Mat random_points(int n, int d, std::uint64_t seed) {
  std::mt19937_64 rng = make_engine(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Mat X(n, d);
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = g(rng);
  return X;
}

}  // namespace

TEST_CASE("flat parameter layout maps a, W, b, b0 to the right slots",
          "[network]") {
  Network net;
  net.m = 2;
  net.d = 3;
  REQUIRE(net.p() == 2 * 3 + 2 * 2 + 1);
  net.theta = Vec::LinSpaced(net.p(), 1.0, static_cast<double>(net.p()));

  CHECK(net.a()(0) == 1.0);
  CHECK(net.a()(1) == 2.0);
  // W is row-major: row l of W occupies theta[m + l*d .. m + l*d + d - 1].
  CHECK(net.W()(0, 0) == 3.0);
  CHECK(net.W()(0, 2) == 5.0);
  CHECK(net.W()(1, 0) == 6.0);
  CHECK(net.W()(1, 2) == 8.0);
  CHECK(net.b()(0) == 9.0);
  CHECK(net.b()(1) == 10.0);
  CHECK(net.b0() == 11.0);

  net.b0() = -4.0;
  CHECK(net.theta(net.p() - 1) == -4.0);
}

TEST_CASE("forward matches the hand-written formula", "[network]") {
  Network net;
  net.m = 2;
  net.d = 2;
  net.theta = Vec::Zero(net.p());
  net.a() << 1.5, -0.5;
  net.W() << 0.25, -1.0, 2.0, 0.5;
  net.b() << 0.1, -0.2;
  net.b0() = 0.3;

  Vec x(2);
  x << 0.7, -0.4;
  const double z0 = 0.25 * 0.7 + (-1.0) * (-0.4) + 0.1;
  const double z1 = 2.0 * 0.7 + 0.5 * (-0.4) - 0.2;
  for (Activation act : {Activation::softplus, Activation::tanh,
                         Activation::sigmoid, Activation::erf}) {
    const double expected = (1.5 * activation_value(act, z0) -
                             0.5 * activation_value(act, z1)) /
                                std::sqrt(2.0) +
                            0.3;
    CHECK(forward(net, act, x) == Catch::Approx(expected).epsilon(1e-15));
  }
}

TEST_CASE("forward_batch agrees with per-point forward bitwise", "[network]") {
  const Network net = random_net(16, 3, 11);
  const Mat X = random_points(7, 3, 12);
  for (Activation act : {Activation::tanh, Activation::erf}) {
    const Vec f = forward_batch(net, act, X);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const Vec xi = X.row(i).transpose();
      // Same reduction tree on both paths, so equality is exact.
      CHECK(f(i) == forward(net, act, xi));
    }
  }
}

TEST_CASE("param_gradient matches central finite differences", "[network]") {
  const Network net = random_net(4, 2, 21);
  Vec x(2);
  x << 0.6, -0.9;
  const double h = 1e-6;
  for (Activation act : {Activation::softplus, Activation::tanh,
                         Activation::sigmoid, Activation::erf}) {
    const Vec g = param_gradient(net, act, x);
    REQUIRE(g.size() == net.p());
    CHECK(g(net.p() - 1) == 1.0);  // bias-output coordinate is exact
    for (int j = 0; j < net.p(); ++j) {
      Network plus = net, minus = net;
      plus.theta(j) += h;
      minus.theta(j) -= h;
      const double fd =
          (forward(plus, act, x) - forward(minus, act, x)) / (2.0 * h);
      CHECK(g(j) == Catch::Approx(fd).margin(1e-8));
    }
  }
}

TEST_CASE("flow_rhs equals the assembled -(1/n) sum r_i grad f(x_i)",
          "[network]") {
  const Network net = random_net(12, 2, 31);
  const Mat X = random_points(9, 2, 32);
  const Vec y = random_points(9, 1, 33).col(0);
  for (Activation act : {Activation::softplus, Activation::erf}) {
    const Vec r = residual(net, act, X, y);
    Vec naive = Vec::Zero(net.p());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const Vec xi = X.row(i).transpose();
      naive -= r(i) * param_gradient(net, act, xi);
    }
    naive /= static_cast<double>(X.rows());
    const Vec fast = flow_rhs(net, act, X, y);
    const double scale = std::max(1.0, naive.cwiseAbs().maxCoeff());
    CHECK((fast - naive).cwiseAbs().maxCoeff() <= 1e-13 * scale);
  }
}

TEST_CASE("flow_rhs norm is controlled by the worst gradient and the residual",
          "[network]") {
  const Network net = random_net(8, 2, 41);
  const Mat X = random_points(6, 2, 42);
  const Vec y = Vec::Ones(6);
  const Vec r = residual(net, Activation::tanh, X, y);
  double grad_max = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Vec xi = X.row(i).transpose();
    grad_max =
        std::max(grad_max, l2_norm(param_gradient(net, Activation::tanh, xi)));
  }
  const double lhs = l2_norm(flow_rhs(net, Activation::tanh, X, y));
  CHECK(lhs <= grad_max * rn_norm(r) + 1e-12);
}

TEST_CASE("doubling init cancels the initial output exactly", "[network]") {
  for (InitFamily fam :
       {InitFamily::gaussian, InitFamily::uniform, InitFamily::rademacher}) {
    const Network net = init_network(32, 2, fam, InitScheme::doubling, 97);
    const int h = net.m / 2;
    CHECK(net.a().head(h) == -net.a().tail(h));
    CHECK(net.W().topRows(h) == net.W().bottomRows(h));
    CHECK(net.b().head(h) == net.b().tail(h));
    CHECK(net.b0() == 0.0);

    const Mat X = random_points(5, 2, 98);
    const Vec f = forward_batch(net, Activation::tanh, X);
    for (Eigen::Index i = 0; i < f.size(); ++i) CHECK(f(i) == 0.0);

    Vec x(2);
    x << 1e3, -2e3;  // large inputs still cancel under the pairwise tree
    CHECK(forward(net, Activation::softplus, x) == 0.0);
  }
}

TEST_CASE("doubling init requires an even width", "[network]") {
  REQUIRE_THROWS_AS(
      init_network(7, 2, InitFamily::gaussian, InitScheme::doubling, 1),
      std::invalid_argument);
  REQUIRE_THROWS_WITH(
      init_network(7, 2, InitFamily::gaussian, InitScheme::doubling, 1),
      Catch::Matchers::ContainsSubstring("even"));
}

TEST_CASE("init_network is deterministic in the seed", "[network]") {
  const Network a = random_net(16, 3, 123);
  const Network b = random_net(16, 3, 123);
  const Network c = random_net(16, 3, 124);
  CHECK(a.theta == b.theta);
  CHECK(a.theta != c.theta);
}

TEST_CASE("forward rejects inputs of the wrong dimension", "[network]") {
  const Network net = random_net(4, 3, 51);
  Vec x(2);
  x << 1.0, 2.0;
  REQUIRE_THROWS_WITH(forward(net, Activation::tanh, x),
                      Catch::Matchers::ContainsSubstring("dim"));
  REQUIRE_THROWS_AS(param_gradient(net, Activation::tanh, x),
                    std::invalid_argument);
}

TEST_CASE("xi and xi-tilde match hand values and floor at one", "[network]") {
  Network net;
  net.m = 3;
  net.d = 2;
  net.theta = Vec::Zero(net.p());
  net.a() << 0.1, -0.2, 0.05;
  net.W() << 3.0, 0.0, 0.0, 4.0, 0.0, 0.0;  // singular values {4, 3}
  net.b() << 0.5, -0.5, 0.25;
  net.b0() = 0.0;

  const double inv_sqrt_m = 1.0 / std::sqrt(3.0);
  CHECK(xi_of(net) == Catch::Approx(4.0 * inv_sqrt_m).epsilon(1e-12));
  CHECK(xi_tilde_of(net) == Catch::Approx(4.0).epsilon(1e-12));

  net.W() *= 1e-3;  // everything small: both ratios floor at 1
  net.b() *= 1e-3;
  CHECK(xi_of(net) == 1.0);
  CHECK(xi_tilde_of(net) == 1.0);
}

TEST_CASE("pairwise reductions agree with naive sums", "[network]") {
  std::mt19937_64 rng = make_engine(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n : {1, 2, 15, 16, 17, 100}) {
    Vec v(n), w(n);
    for (int i = 0; i < n; ++i) {
      v(i) = u(rng);
      w(i) = u(rng);
    }
    CHECK(pairwise_sum(v.data(), n) == Catch::Approx(v.sum()).margin(1e-13));
    CHECK(pairwise_dot(v.data(), w.data(), n) ==
          Catch::Approx(v.dot(w)).margin(1e-13));
  }
  Vec a(3), b(4);
  REQUIRE_THROWS_AS(pairwise_dot(a, b), std::invalid_argument);
}

TEST_CASE("1/n inner product scales as advertised", "[network]") {
  const Vec ones = Vec::Ones(64);
  CHECK(rn_norm(ones) == Catch::Approx(1.0).epsilon(1e-15));
  const Vec twos = 2.0 * Vec::Ones(16);
  CHECK(rn_dot(twos, twos) == Catch::Approx(4.0).epsilon(1e-15));
}
