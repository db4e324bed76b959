#pragma once

/// @file linalg.hpp
/// Symmetric eigendecomposition (descending) and a dependency-free power
/// iteration for operator norms of symmetric matrices.

#include <stdexcept>

#include "ntklab/common.hpp"

namespace ntklab {

struct SymEig {
  Vec values;   ///< descending
  Mat vectors;  ///< columns, unit Euclidean norm, ordered with values
};

inline SymEig sym_eig_descending(const Mat& A) {
  if (A.rows() != A.cols())
    throw std::invalid_argument("sym_eig_descending: matrix not square");
  Eigen::SelfAdjointEigenSolver<Mat> es(A);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("sym_eig_descending: eigensolver failed");
  SymEig out;
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  return out;
}

/// Applies exp(-G t) to vectors through one cached eigendecomposition of a
/// symmetric PSD matrix G; exact solution operator of v' = -G v.
class SymExpFlow {
 public:
  explicit SymExpFlow(const Mat& G) : eig_(sym_eig_descending(G)) {}

  Vec apply(const Vec& v, double t) const {
    if (t < 0.0)
      throw std::invalid_argument("SymExpFlow::apply: t must be >= 0");
    if (v.size() != eig_.values.size())
      throw std::invalid_argument("SymExpFlow::apply: dimension mismatch");
    Vec coeffs = eig_.vectors.transpose() * v;
    for (Eigen::Index i = 0; i < coeffs.size(); ++i)
      coeffs(i) *= std::exp(-eig_.values(i) * t);
    return eig_.vectors * coeffs;
  }

  const SymEig& eig() const { return eig_; }

 private:
  SymEig eig_;
};

/// Largest absolute eigenvalue of a symmetric matrix by power iteration.
/// Deterministic start vector; returns the best estimate after at most
/// max_iter sweeps or once successive estimates agree to tol.
inline double power_iteration_opnorm(const Mat& A, int max_iter = 500,
                                     double tol = 1e-10) {
  if (A.rows() != A.cols())
    throw std::invalid_argument("power_iteration_opnorm: matrix not square");
  const Eigen::Index n = A.rows();
  if (n == 0) return 0.0;
  Vec v = Vec::LinSpaced(n, 1.0, 2.0);
  v /= v.norm();
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vec w = A * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    w /= norm;
    const double prev = lambda;
    lambda = norm;
    v = w;
    if (it > 0 && std::fabs(lambda - prev) <= tol * std::max(1.0, lambda))
      break;
  }
  return lambda;
}

}  // namespace ntklab
