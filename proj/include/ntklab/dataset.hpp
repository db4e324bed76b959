#pragma once

/// @file dataset.hpp
/// Input samplers (unit circle, unit sphere), bandlimited cosine targets on
/// the circle, and the labeled-dataset container.
///
/// Circle conventions: the data measure is the uniform probability measure
/// d(theta)/2pi; the L2-orthonormal basis is {1, sqrt(2)cos(k theta),
/// sqrt(2)sin(k theta)}. Points use standard Euclidean coordinates, so every
/// sampled input has norm exactly 1 (data radius M = 1).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "ntklab/common.hpp"
#include "ntklab/rng.hpp"

namespace ntklab {

struct Dataset {
  Mat X;  ///< n x d, rows are points
  Vec y;  ///< labels
};

enum class CircleSampling { iid, equispaced };

inline Mat circle_points_from_angles(const Vec& angles) {
  Mat X(angles.size(), 2);
  for (Eigen::Index i = 0; i < angles.size(); ++i) {
    X(i, 0) = std::cos(angles(i));
    X(i, 1) = std::sin(angles(i));
  }
  return X;
}

/// Draws n angles in [0, 2pi): i.i.d. uniform by default, or the equispaced
/// lattice 2pi*i/n (which ignores the seed).
inline Vec circle_angles(int n, std::uint64_t seed,
                         CircleSampling sampling = CircleSampling::iid) {
  if (n < 1) throw std::invalid_argument("circle_angles: n must be >= 1");
  Vec angles(n);
  if (sampling == CircleSampling::equispaced) {
    for (int i = 0; i < n; ++i)
      angles(i) = 2.0 * std::numbers::pi * i / static_cast<double>(n);
    return angles;
  }
  std::mt19937_64 rng = make_engine(seed);
  std::uniform_real_distribution<double> dist(0.0, 2.0 * std::numbers::pi);
  for (int i = 0; i < n; ++i) angles(i) = dist(rng);
  return angles;
}

/// Midpoint lattice used for held-out evaluation grids; offset by half a cell
/// so grid points never coincide with equispaced training points.
inline Vec circle_eval_angles(int n) {
  Vec angles(n);
  for (int i = 0; i < n; ++i)
    angles(i) = 2.0 * std::numbers::pi * (i + 0.5) / static_cast<double>(n);
  return angles;
}

/// Uniform points on the unit sphere S^{d-1} (normalized Gaussians).
inline Mat sphere_points(int n, int d, std::uint64_t seed) {
  if (n < 1 || d < 1)
    throw std::invalid_argument("sphere_points: n and d must be >= 1");
  Mat X(n, d);
  std::mt19937_64 rng = make_engine(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    double norm2 = 0.0;
    do {
      for (int j = 0; j < d; ++j) X(i, j) = dist(rng);
      norm2 = X.row(i).squaredNorm();
    } while (norm2 == 0.0);
    X.row(i) /= std::sqrt(norm2);
  }
  return X;
}

/// Angles of 2-d points (for circle datasets), in [0, 2pi).
inline Vec angles_of(const Mat& X) {
  if (X.cols() != 2)
    throw std::invalid_argument("angles_of: points must be 2-dimensional");
  Vec angles(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double a = std::atan2(X(i, 1), X(i, 0));
    if (a < 0.0) a += 2.0 * std::numbers::pi;
    angles(i) = a;
  }
  return angles;
}

/// Finite cosine series f*(theta) = sum_j c_j phi_{k_j}(theta) with
/// phi_0 = 1 and phi_k = sqrt(2) cos(k theta) for k >= 1.
struct BandlimitedTarget {
  std::vector<int> modes;
  std::vector<double> coeffs;

  void validate() const {
    if (modes.size() != coeffs.size())
      throw std::invalid_argument(
          "BandlimitedTarget: modes and coefficients differ in length");
    if (modes.empty())
      throw std::invalid_argument("BandlimitedTarget: no modes");
    for (int k : modes)
      if (k < 0) throw std::invalid_argument("BandlimitedTarget: negative mode");
  }

  double eval_angle(double theta) const {
    double v = 0.0;
    for (std::size_t j = 0; j < modes.size(); ++j) {
      const int k = modes[j];
      v += (k == 0) ? coeffs[j]
                    : coeffs[j] * std::numbers::sqrt2 * std::cos(k * theta);
    }
    return v;
  }

  Vec eval_angles(const Vec& angles) const {
    Vec v(angles.size());
    for (Eigen::Index i = 0; i < angles.size(); ++i)
      v(i) = eval_angle(angles(i));
    return v;
  }

  /// L2 norm under the uniform probability measure (basis is orthonormal).
  double l2_norm() const {
    double s = 0.0;
    for (double c : coeffs) s += c * c;
    return std::sqrt(s);
  }

  /// Sup norm over a fine angle grid (exact enough for bandlimited series).
  double sup_norm(int grid = 4096) const {
    double s = 0.0;
    for (int i = 0; i < grid; ++i)
      s = std::max(s, std::fabs(eval_angle(2.0 * std::numbers::pi * i / grid)));
    return s;
  }

  /// Maximum frequency present.
  int max_mode() const {
    int k = 0;
    for (int m : modes) k = std::max(k, m);
    return k;
  }
};

/// Circle dataset labeled by a bandlimited target.
inline Dataset make_circle_dataset(int n, const BandlimitedTarget& target,
                                   std::uint64_t seed,
                                   CircleSampling sampling = CircleSampling::iid) {
  target.validate();
  const Vec angles = circle_angles(n, seed, sampling);
  Dataset data;
  data.X = circle_points_from_angles(angles);
  data.y = target.eval_angles(angles);
  return data;
}

}  // namespace ntklab
