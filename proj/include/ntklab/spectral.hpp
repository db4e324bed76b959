#pragma once

/// @file spectral.hpp
/// Eigendecomposition of normalized Gram matrices under the 1/n inner
/// product, Nystrom eigenfunction extension, the exact circle Fourier
/// eigenbasis of rotation-invariant kernels, projections, and label
/// participation in bottom eigendirections.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "ntklab/common.hpp"
#include "ntklab/kernel.hpp"
#include "ntklab/linalg.hpp"
#include "ntklab/rng.hpp"

namespace ntklab {

/// Spectrum of G with eigenvectors normalized to ||u_i||_2 = sqrt(n), so the
/// columns are orthonormal under the 1/n inner product.
struct EigenSystem {
  Vec lambdas;  ///< descending, clamped at 0
  Mat U;        ///< n x n, column i pairs with lambdas(i)

  int n() const { return static_cast<int>(lambdas.size()); }
};

/// Decomposes G (the normalized member of the pair). Tiny negative
/// eigenvalues from rounding are clamped to zero; genuinely negative
/// spectra are rejected.
inline EigenSystem eig_gram(const GramPair& g) {
  SymEig e = sym_eig_descending(g.G);
  const double lambda1 = std::max(e.values(0), 0.0);
  const double clamp_floor = -1e-10 * std::max(1.0, lambda1);
  for (Eigen::Index i = 0; i < e.values.size(); ++i) {
    if (e.values(i) < clamp_floor)
      throw std::invalid_argument(
          "eig_gram: matrix has eigenvalue " + std::to_string(e.values(i)) +
          " below the PSD tolerance");
    if (e.values(i) < 0.0) e.values(i) = 0.0;
  }
  EigenSystem sys;
  sys.lambdas = std::move(e.values);
  sys.U = e.vectors * std::sqrt(static_cast<double>(g.G.rows()));
  return sys;
}

struct Projection {
  Vec coeffs;         ///< <v, u_i>_{1/n} for i < k
  Vec reconstruction; ///< P_k v
};

/// Orthogonal projection onto the span of the top k eigenvectors.
inline Projection project(const Vec& v, const EigenSystem& sys, int k) {
  if (k < 1 || k > sys.n())
    throw std::invalid_argument("project: k=" + std::to_string(k) +
                                " out of range [1, " + std::to_string(sys.n()) +
                                "]");
  if (v.size() != sys.n())
    throw std::invalid_argument("project: vector length mismatch");
  Projection p;
  p.coeffs = sys.U.leftCols(k).transpose() * v / static_cast<double>(sys.n());
  p.reconstruction = sys.U.leftCols(k) * p.coeffs;
  return p;
}

/// ||(I - P_k) y|| under the 1/n norm.
inline double bottom_participation(const Vec& y, const EigenSystem& sys, int k) {
  const Projection p = project(y, sys, k);
  return rn_norm(Vec(y - p.reconstruction));
}

enum class ModeKind { constant, cosine, sine };

struct ModeInfo {
  double sigma = 0.0;
  int freq = 0;
  ModeKind kind = ModeKind::constant;

  std::string label() const {
    switch (kind) {
      case ModeKind::constant: return "const";
      case ModeKind::cosine: return "cos_" + std::to_string(freq);
      case ModeKind::sine: return "sin_" + std::to_string(freq);
    }
    return "?";
  }

  /// Orthonormal basis under the uniform probability measure on the circle.
  double eval(double theta) const {
    switch (kind) {
      case ModeKind::constant: return 1.0;
      case ModeKind::cosine: return std::numbers::sqrt2 * std::cos(freq * theta);
      case ModeKind::sine: return std::numbers::sqrt2 * std::sin(freq * theta);
    }
    return 0.0;
  }
};

/// Integral-operator spectrum model: eigenvalues sigma_i (descending) with
/// their eigenfunctions.
struct SpectrumModel {
  std::vector<ModeInfo> modes;  ///< sorted by sigma, descending
  double kappa = 0.0;           ///< max_x K(x, x)

  int size() const { return static_cast<int>(modes.size()); }
  double sigma(int i) const { return modes.at(i).sigma; }
  double trace() const {
    double s = 0.0;
    for (const auto& m : modes) s += m.sigma;
    return s;
  }
  /// Largest sigma whose mode has the given frequency (pairs share sigma).
  double sigma_of_freq(int freq) const {
    for (const auto& m : modes)
      if (m.freq == freq) return m.sigma;
    throw std::invalid_argument("SpectrumModel: frequency " +
                                std::to_string(freq) + " not retained");
  }
};

/// Fourier-mode spectrum from equispaced samples of the kernel profile
/// g(delta) = K(delta, 0) at delta_j = 2 pi j / q, j = 0..q-1 (periodic
/// trapezoid quadrature, spectrally accurate for smooth profiles). For
/// frequency k >= 1 the cosine and sine modes share the eigenvalue.
inline SpectrumModel circle_fourier_model_from_profile(const Vec& profile_values,
                                                       int max_freq) {
  if (max_freq < 0)
    throw std::invalid_argument("circle_fourier_model: max_freq must be >= 0");
  const Eigen::Index q = profile_values.size();
  if (q < 4 * (max_freq + 1))
    throw std::invalid_argument(
        "circle_fourier_model: profile grid too coarse for max_freq");
  SpectrumModel model;
  model.kappa = profile_values(0);
  for (int k = 0; k <= max_freq; ++k) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < q; ++j)
      acc += profile_values(j) *
             std::cos(k * (2.0 * std::numbers::pi * static_cast<double>(j) /
                           static_cast<double>(q)));
    double sigma = acc / static_cast<double>(q);  // k = 0: mean; else c_k / 2
    if (sigma < -1e-8)
      throw std::invalid_argument(
          "circle_fourier_model: profile has significantly negative Fourier "
          "coefficient at frequency " + std::to_string(k));
    sigma = std::max(sigma, 0.0);
    if (k == 0) {
      model.modes.push_back({sigma, 0, ModeKind::constant});
    } else {
      model.modes.push_back({sigma, k, ModeKind::cosine});
      model.modes.push_back({sigma, k, ModeKind::sine});
    }
  }
  std::stable_sort(model.modes.begin(), model.modes.end(),
                   [](const ModeInfo& a, const ModeInfo& b) {
                     return a.sigma > b.sigma;
                   });
  return model;
}

/// Exact eigenbasis of a rotation-invariant kernel on the circle with the
/// uniform data measure: the Fourier modes, with eigenvalues from the
/// kernel profile's cosine coefficients (8192-point periodic trapezoid,
/// spectrally accurate for smooth profiles). The kernel is first checked
/// for rotation invariance, |K(t1,t2) - profile(t1-t2)| <= 1e-6, on 64
/// deterministic random pairs.
inline SpectrumModel circle_fourier_model(
    const std::function<double(double, double)>& kernel_on_angles,
    int max_freq) {
  if (max_freq < 0)
    throw std::invalid_argument("circle_fourier_model: max_freq must be >= 0");

  const auto profile = [&](double delta) { return kernel_on_angles(delta, 0.0); };

  std::mt19937_64 rng = make_engine(derive_seed(0, "circle-invariance"));
  std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
  for (int i = 0; i < 64; ++i) {
    const double t1 = ang(rng), t2 = ang(rng);
    const double dev = std::fabs(kernel_on_angles(t1, t2) - profile(t1 - t2));
    if (dev > 1e-6)
      throw std::invalid_argument(
          "circle_fourier_model: kernel is not rotation invariant (deviation " +
          std::to_string(dev) + " at a random pair)");
  }

  const int q = 8192;
  Vec g(q);
  for (int j = 0; j < q; ++j)
    g(j) = profile(2.0 * std::numbers::pi * j / q);
  return circle_fourier_model_from_profile(g, max_freq);
}

/// Quadrature L2 inner product <values, mode> over an equispaced angle grid
/// (exact for bandlimited integrands below the grid's Nyquist frequency).
inline double circle_mode_inner(const Vec& values, const Vec& grid_angles,
                                const ModeInfo& mode) {
  if (values.size() != grid_angles.size())
    throw std::invalid_argument("circle_mode_inner: length mismatch");
  const Eigen::Index n = values.size();
  Vec prod(n);
  for (Eigen::Index i = 0; i < n; ++i)
    prod(i) = values(i) * mode.eval(grid_angles(i));
  return pairwise_sum(prod.data(), n) / static_cast<double>(n);
}

/// Nystrom extension of the i-th empirical eigenfunction:
///   v_i(x) = (1 / (sqrt(lambda_i) n)) sum_j K(x, x_j) (u_i)_j,
/// which satisfies v_i(x_j) = sqrt(lambda_i) (u_i)_j exactly on the data.
/// kernel_row holds (K(x, x_1), ..., K(x, x_n)).
inline double nystrom_eval(const EigenSystem& sys, const Vec& kernel_row,
                           int i) {
  if (i < 0 || i >= sys.n())
    throw std::invalid_argument("nystrom_eval: index out of range");
  if (kernel_row.size() != sys.n())
    throw std::invalid_argument("nystrom_eval: kernel row length mismatch");
  const double lambda = sys.lambdas(i);
  if (lambda <= 1e-10)
    throw std::invalid_argument(
        "nystrom_eval: eigenvalue " + std::to_string(lambda) +
        " too small for a stable extension (threshold 1e-10)");
  return kernel_row.dot(sys.U.col(i)) /
         (std::sqrt(lambda) * static_cast<double>(sys.n()));
}

/// Batch Nystrom evaluation: K_cross is (grid x n); returns (grid x k).
inline Mat nystrom_extend(const EigenSystem& sys, const Mat& K_cross, int k) {
  if (k < 1 || k > sys.n())
    throw std::invalid_argument("nystrom_extend: k out of range");
  if (K_cross.cols() != sys.n())
    throw std::invalid_argument("nystrom_extend: cross-kernel column mismatch");
  for (int i = 0; i < k; ++i)
    if (sys.lambdas(i) <= 1e-10)
      throw std::invalid_argument(
          "nystrom_extend: eigenvalue " + std::to_string(sys.lambdas(i)) +
          " at index " + std::to_string(i) + " below the 1e-10 threshold");
  Mat out = K_cross * sys.U.leftCols(k);
  for (int i = 0; i < k; ++i)
    out.col(i) /= std::sqrt(sys.lambdas(i)) * static_cast<double>(sys.n());
  return out;
}

/// Max over the top k modes of |v_i(x_j) - sqrt(lambda_i) (u_i)_j|: the
/// Nystrom consistency identity evaluated through the training Gram matrix.
inline double nystrom_consistency_error(const EigenSystem& sys,
                                        const GramPair& g, int k) {
  const Mat v_on_data = nystrom_extend(sys, g.H, k);
  double worst = 0.0;
  for (int i = 0; i < k; ++i) {
    const Vec expect = std::sqrt(sys.lambdas(i)) * sys.U.col(i);
    worst = std::max(worst, (v_on_data.col(i) - expect).cwiseAbs().maxCoeff());
  }
  return worst;
}

/// Indices of the eigenvectors of sys spanning the frequency-k Fourier
/// eigenspace, selected by projection energy of the sampled cos/sin pair
/// (one index for k = 0, two otherwise).
inline std::vector<int> eigenspace_for_frequency(const EigenSystem& sys,
                                                 const Vec& data_angles,
                                                 int freq) {
  if (data_angles.size() != sys.n())
    throw std::invalid_argument("eigenspace_for_frequency: angle count mismatch");
  const Eigen::Index n = data_angles.size();
  Vec c(n), s(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    c(i) = std::cos(freq * data_angles(i));
    s(i) = std::sin(freq * data_angles(i));
  }
  std::vector<std::pair<double, int>> energy(sys.n());
  for (int i = 0; i < sys.n(); ++i) {
    const double ec = rn_dot(c, Vec(sys.U.col(i)));
    const double es = rn_dot(s, Vec(sys.U.col(i)));
    energy[i] = {ec * ec + es * es, i};
  }
  std::sort(energy.begin(), energy.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<int> idx;
  const int take = (freq == 0) ? 1 : 2;
  for (int i = 0; i < take; ++i) idx.push_back(energy[i].second);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace ntklab
