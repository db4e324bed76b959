#pragma once

/// @file network.hpp
/// One-hidden-layer network f(x) = (1/sqrt(m)) a^T sigma(Wx + b) + b0 with a
/// flat parameter layout and the gradient/flow right-hand-side evaluations.
///
/// Flat layout (length p = m*d + 2m + 1, fixed for gradients, ODE state, and
/// checkpoints): a[0..m), vec(W) row-major [m..m+m*d), b[..+m), b0 last.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ntklab/activation.hpp"
#include "ntklab/common.hpp"
#include "ntklab/rng.hpp"

namespace ntklab {

enum class InitScheme { iid, doubling };

inline std::string to_string(InitScheme s) {
  return s == InitScheme::iid ? "iid" : "doubling";
}

inline InitScheme init_scheme_from_string(std::string_view s) {
  if (s == "iid") return InitScheme::iid;
  if (s == "doubling") return InitScheme::doubling;
  throw std::invalid_argument("unknown init scheme '" + std::string(s) +
                              "' (expected iid | doubling)");
}

struct Network {
  int m = 0;
  int d = 0;
  Vec theta;

  int p() const { return m * d + 2 * m + 1; }

  auto a() { return theta.segment(0, m); }
  auto a() const { return theta.segment(0, m); }
  Eigen::Map<RowMat> W() {
    return Eigen::Map<RowMat>(theta.data() + m, m, d);
  }
  Eigen::Map<const RowMat> W() const {
    return Eigen::Map<const RowMat>(theta.data() + m, m, d);
  }
  auto b() { return theta.segment(m + m * d, m); }
  auto b() const { return theta.segment(m + m * d, m); }
  double& b0() { return theta(p() - 1); }
  double b0() const { return theta(p() - 1); }
};

/// Builds a width-m network. Under the doubling scheme, m is the final
/// (post-doubling) width: half the units are drawn, then mirrored with
/// negated outer weights and b0 = 0, so f(.;theta0) vanishes identically.
/// Draw order within the "init" substream: a, W rows, b, then b0 (iid only).
inline Network init_network(int m, int d, InitFamily family, InitScheme scheme,
                            std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("init_network: width m must be >= 1");
  if (d < 1) throw std::invalid_argument("init_network: dim d must be >= 1");
  if (scheme == InitScheme::doubling && m % 2 != 0)
    throw std::invalid_argument(
        "init_network: doubling scheme requires an even final width (got m=" +
        std::to_string(m) + ")");

  Network net;
  net.m = m;
  net.d = d;
  net.theta = Vec::Zero(m * d + 2 * m + 1);
  std::mt19937_64 rng = make_engine(derive_seed(seed, "init"));

  if (scheme == InitScheme::iid) {
    fill_unit_variance(family, rng, net.theta.data(), m);               // a
    fill_unit_variance(family, rng, net.theta.data() + m, m * d);       // W
    fill_unit_variance(family, rng, net.theta.data() + m + m * d, m);   // b
    fill_unit_variance(family, rng, net.theta.data() + net.p() - 1, 1); // b0
    return net;
  }

  const int h = m / 2;
  Vec a_half(h), b_half(h);
  RowMat w_half(h, d);
  fill_unit_variance(family, rng, a_half.data(), h);
  fill_unit_variance(family, rng, w_half.data(), h * d);
  fill_unit_variance(family, rng, b_half.data(), h);
  net.a().head(h) = a_half;
  net.a().tail(h) = -a_half;
  net.W().topRows(h) = w_half;
  net.W().bottomRows(h) = w_half;
  net.b().head(h) = b_half;
  net.b().tail(h) = b_half;
  net.b0() = 0.0;
  return net;
}

inline void check_input_dim(const Network& net, Eigen::Index dim,
                            const char* where) {
  if (dim != net.d)
    throw std::invalid_argument(std::string(where) + ": input dim " +
                                std::to_string(dim) + " != network dim " +
                                std::to_string(net.d));
}

/// f(x) with the fixed pairwise reduction over hidden units.
inline double forward(const Network& net, Activation act,
                      const Eigen::Ref<const Vec>& x) {
  check_input_dim(net, x.size(), "forward");
  const auto a = net.a();
  const auto W = net.W();
  const auto b = net.b();
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(net.m));
  const double s = detail::pairwise_reduce(0, net.m, [&](std::ptrdiff_t l) {
    double z = b(l);
    for (int j = 0; j < net.d; ++j) z += W(l, j) * x(j);
    return a(l) * activation_value(act, z);
  });
  return inv_sqrt_m * s + net.b0();
}

/// Hidden-layer evaluations for a batch of points (columns index points).
struct HiddenCache {
  Mat Z;   ///< pre-activations, m x n
  Mat S;   ///< sigma(Z)
  Mat D1;  ///< sigma'(Z)
};

/// Points are the rows of X (n x d); columns of the cache index points.
inline HiddenCache hidden_cache(const Network& net, Activation act,
                                const Mat& X) {
  check_input_dim(net, X.cols(), "hidden_cache");
  const auto W = net.W();
  const auto b = net.b();
  HiddenCache c;
  c.Z.resize(net.m, X.rows());
  c.S.resize(net.m, X.rows());
  c.D1.resize(net.m, X.rows());
  // Pre-activations accumulate in the same scalar order as the single-point
  // forward (bias first, then input coordinates), so batched and per-point
  // evaluations agree bitwise, not just to rounding.
  for (Eigen::Index j = 0; j < X.rows(); ++j) {
    for (Eigen::Index i = 0; i < net.m; ++i) {
      double z = b(i);
      for (int k = 0; k < net.d; ++k) z += W(i, k) * X(j, k);
      c.Z(i, j) = z;
      c.S(i, j) = activation_value(act, z);
      c.D1(i, j) = activation_d1(act, z);
    }
  }
  return c;
}

/// f on every row of X; same reduction tree as the single-point forward.
inline Vec forward_batch(const Network& net, Activation act, const Mat& X) {
  const HiddenCache c = hidden_cache(net, act, X);
  const auto a = net.a();
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(net.m));
  Vec f(X.rows());
  for (Eigen::Index j = 0; j < X.rows(); ++j) {
    const double* col = c.S.col(j).data();
    const double s = detail::pairwise_reduce(
        0, net.m, [&](std::ptrdiff_t l) { return a(l) * col[l]; });
    f(j) = inv_sqrt_m * s + net.b0();
  }
  return f;
}

/// Parameter gradient of f at x in the flat layout; last coordinate is 1.
inline Vec param_gradient(const Network& net, Activation act,
                          const Eigen::Ref<const Vec>& x) {
  check_input_dim(net, x.size(), "param_gradient");
  const auto a = net.a();
  const auto W = net.W();
  const auto b = net.b();
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(net.m));
  Vec g(net.p());
  for (int l = 0; l < net.m; ++l) {
    double z = b(l);
    for (int j = 0; j < net.d; ++j) z += W(l, j) * x(j);
    const double s = activation_value(act, z);
    const double ds = activation_d1(act, z);
    g(l) = inv_sqrt_m * s;
    const double w_factor = inv_sqrt_m * a(l) * ds;
    for (int j = 0; j < net.d; ++j) g(net.m + l * net.d + j) = w_factor * x(j);
    g(net.m + net.m * net.d + l) = w_factor;
  }
  g(net.p() - 1) = 1.0;
  return g;
}

/// Training residual r-hat = f(X) - y.
inline Vec residual(const Network& net, Activation act, const Mat& X,
                    const Vec& y) {
  if (X.rows() != y.size())
    throw std::invalid_argument("residual: X rows != y size");
  return forward_batch(net, act, X) - y;
}

/// Gradient-flow right-hand side: -(1/n) sum_i rhat_i param_gradient(x_i),
/// assembled in the flat layout without materializing per-point gradients.
inline Vec flow_rhs(const Network& net, Activation act, const Mat& X,
                    const Vec& y) {
  if (X.rows() == 0) throw std::invalid_argument("flow_rhs: empty dataset");
  const Eigen::Index n = X.rows();
  const HiddenCache cache = hidden_cache(net, act, X);
  const auto a = net.a();
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(net.m));

  Vec f(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double* col = cache.S.col(j).data();
    const double s = detail::pairwise_reduce(
        0, net.m, [&](std::ptrdiff_t l) { return a(l) * col[l]; });
    f(j) = inv_sqrt_m * s + net.b0();
  }
  const Vec c = (f - y) / static_cast<double>(n);

  Vec rhs = Vec::Zero(net.p());
  rhs.segment(0, net.m) = -inv_sqrt_m * (cache.S * c);
  const Vec dc = cache.D1 * c;                       // m, = sum_i c_i sigma'(z_li)
  Mat dcx = cache.D1 * (c.asDiagonal() * X);         // m x d
  for (int l = 0; l < net.m; ++l) {
    const double w_factor = -inv_sqrt_m * a(l);
    for (int j = 0; j < net.d; ++j)
      rhs(net.m + l * net.d + j) = w_factor * dcx(l, j);
    rhs(net.m + net.m * net.d + l) = w_factor * dc(l);
  }
  rhs(net.p() - 1) = -pairwise_sum(c.data(), c.size());
  return rhs;
}

/// xi(t) = max{ ||W||_op, ||b||_2, ||a||_2 } / sqrt(m), floored at 1.
inline double xi_of(const Network& net) {
  const Eigen::MatrixXd wtw = net.W().transpose() * net.W();
  Eigen::SelfAdjointEigenSolver<Mat> es(wtw, Eigen::EigenvaluesOnly);
  const double w_op = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(net.m));
  const double a2 = l2_norm(Vec(net.a()));
  const double b2 = l2_norm(Vec(net.b()));
  return std::max({w_op * inv_sqrt_m, a2 * inv_sqrt_m, b2 * inv_sqrt_m, 1.0});
}

/// xi-tilde(t) = max{ max_l ||w_l||_2, ||a||_inf, ||b||_inf }, floored at 1.
inline double xi_tilde_of(const Network& net) {
  double w_row_max = 0.0;
  for (int l = 0; l < net.m; ++l)
    w_row_max = std::max(w_row_max, net.W().row(l).norm());
  const double a_inf = net.a().cwiseAbs().maxCoeff();
  const double b_inf = net.b().cwiseAbs().maxCoeff();
  return std::max({w_row_max, a_inf, b_inf, 1.0});
}

}  // namespace ntklab
