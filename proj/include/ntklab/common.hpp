#pragma once

/// @file common.hpp
/// Shared aliases, error types, and the deterministic reduction primitives
/// used for kernel entries and norms.

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace ntklab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
/// Row-major matrix type; the flat parameter layout stores W row by row.
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Raised when the adaptive integrator's step size underflows.
class StiffnessError : public std::runtime_error {
 public:
  StiffnessError(const std::string& what, double t, double h, double err_norm)
      : std::runtime_error(what), t_(t), h_(h), err_norm_(err_norm) {}
  double t() const { return t_; }
  double h() const { return h_; }
  double err_norm() const { return err_norm_; }

 private:
  double t_;
  double h_;
  double err_norm_;
};

/// Raised for malformed configs; carries the offending key path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : std::runtime_error("config key '" + key + "': " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

namespace detail {

/// Deterministic pairwise reduction over [lo, hi) with a fixed midpoint-split
/// tree. The split depends only on the range length, so two equal-length
/// ranges whose terms are exact negations produce exactly negated partial
/// sums (this makes the antisymmetric-init cancellation bit-exact).
template <class Term>
double pairwise_reduce(std::ptrdiff_t lo, std::ptrdiff_t hi, const Term& term) {
  const std::ptrdiff_t len = hi - lo;
  if (len <= 16) {
    double s = 0.0;
    for (std::ptrdiff_t i = lo; i < hi; ++i) s += term(i);
    return s;
  }
  const std::ptrdiff_t mid = lo + len / 2;
  return pairwise_reduce(lo, mid, term) + pairwise_reduce(mid, hi, term);
}

}  // namespace detail

inline double pairwise_sum(const double* v, std::ptrdiff_t n) {
  return detail::pairwise_reduce(0, n, [v](std::ptrdiff_t i) { return v[i]; });
}

inline double pairwise_dot(const double* a, const double* b, std::ptrdiff_t n) {
  return detail::pairwise_reduce(0, n,
                                 [a, b](std::ptrdiff_t i) { return a[i] * b[i]; });
}

inline double pairwise_dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("pairwise_dot: size mismatch (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  return pairwise_dot(a.data(), b.data(), a.size());
}

/// Inner product normalized by the dimension: (1/n) sum_i a_i b_i.
inline double rn_dot(const Vec& a, const Vec& b) {
  if (a.size() == 0) throw std::invalid_argument("rn_dot: empty vector");
  return pairwise_dot(a, b) / static_cast<double>(a.size());
}

/// Norm induced by rn_dot; O(1) for O(1) entries regardless of n.
inline double rn_norm(const Vec& a) { return std::sqrt(rn_dot(a, a)); }

/// Plain Euclidean norm computed with the same fixed reduction tree.
inline double l2_norm(const Vec& a) {
  return std::sqrt(pairwise_dot(a.data(), a.data(), a.size()));
}

/// Shortest decimal string that parses back to exactly the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace ntklab
