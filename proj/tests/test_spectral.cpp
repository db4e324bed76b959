#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "ntklab/dataset.hpp"
#include "ntklab/kernel.hpp"
#include "ntklab/rng.hpp"
#include "ntklab/spectral.hpp"

using namespace ntklab;

namespace {

GramPair psd_gram(int n, std::uint64_t seed) {
  std::mt19937_64 rng = make_engine(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Mat A(n, n);
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) A(i, j) = g(rng);
  Mat H = A * A.transpose();
  return make_gram_pair(H, 0.0, KernelTag::analytic_inf);
}

Vec random_vec(int n, std::uint64_t seed) {
  std::mt19937_64 rng = make_engine(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

}  // namespace

TEST_CASE("eig_gram on a 2x2 example", "[spectral]") {
  Mat H(2, 2);
  H << 2.0, 1.0, 1.0, 2.0;
  const EigenSystem sys = eig_gram(make_gram_pair(H, 0.0, KernelTag::initial_0));
  CHECK(sys.lambdas(0) == Catch::Approx(1.5).epsilon(1e-14));
  CHECK(sys.lambdas(1) == Catch::Approx(0.5).epsilon(1e-14));
  // Columns are normalized to ||u||_2 = sqrt(n), i.e. unit 1/n norm.
  CHECK(sys.U.col(0).norm() == Catch::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(rn_norm(Vec(sys.U.col(1))) == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("rank-one gram has unit top eigenvalue", "[spectral]") {
  Vec v(4);
  v << 1.0, 1.0, -1.0, 1.0;  // ||v||_2 = sqrt(n)
  Mat H = v * v.transpose();
  const EigenSystem sys = eig_gram(make_gram_pair(H, 0.0, KernelTag::initial_0));
  CHECK(sys.lambdas(0) == Catch::Approx(1.0).epsilon(1e-14));
  CHECK(sys.lambdas(1) == Catch::Approx(0.0).margin(1e-14));
  CHECK(sys.U.col(0).cwiseAbs().isApprox(v.cwiseAbs(), 1e-12));
}

TEST_CASE("eig_gram rejects genuinely indefinite matrices", "[spectral]") {
  Mat H(2, 2);
  H << 1.0, 0.0, 0.0, -2.0;
  REQUIRE_THROWS_WITH(eig_gram(make_gram_pair(H, 0.0, KernelTag::initial_0)),
                      Catch::Matchers::ContainsSubstring("PSD"));
}

TEST_CASE("projection satisfies Parseval and exact reconstruction",
          "[spectral]") {
  const int n = 6;
  const EigenSystem sys = eig_gram(psd_gram(n, 301));
  const Vec y = random_vec(n, 302);

  const Projection full = project(y, sys, n);
  CHECK(full.coeffs.squaredNorm() ==
        Catch::Approx(rn_dot(y, y)).epsilon(1e-10));
  CHECK((full.reconstruction - y).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(bottom_participation(y, sys, n) <= 1e-10);

  double prev = rn_norm(y) + 1e-12;
  for (int k = 1; k <= n; ++k) {
    const double tail = bottom_participation(y, sys, k);
    CHECK(tail <= prev + 1e-12);  // non-increasing in k
    prev = tail;
  }
  REQUIRE_THROWS_AS(project(y, sys, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(project(y, sys, n + 1), std::invalid_argument);
}

TEST_CASE("fourier model of the profile 1 + cos(delta)", "[spectral]") {
  const SpectrumModel model = circle_fourier_model(
      [](double t1, double t2) { return 1.0 + std::cos(t1 - t2); }, 4);
  CHECK(model.kappa == Catch::Approx(2.0).epsilon(1e-12));
  REQUIRE(model.size() == 9);  // const + cos/sin pairs up to freq 4
  CHECK(model.sigma(0) == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(model.sigma_of_freq(1) == Catch::Approx(0.5).epsilon(1e-12));
  CHECK(model.sigma(1) == Catch::Approx(0.5).epsilon(1e-12));
  CHECK(model.sigma(2) == Catch::Approx(0.5).epsilon(1e-12));
  CHECK(model.sigma(3) == Catch::Approx(0.0).margin(1e-12));
  CHECK(model.sigma_of_freq(2) == Catch::Approx(0.0).margin(1e-12));
  // The frequency-1 pair shares its eigenvalue across cos and sin.
  CHECK(model.modes[1].freq == 1);
  CHECK(model.modes[2].freq == 1);
  REQUIRE_THROWS_WITH(model.sigma_of_freq(9),
                      Catch::Matchers::ContainsSubstring("not retained"));
}

TEST_CASE("fourier model of a constant kernel", "[spectral]") {
  const SpectrumModel model = circle_fourier_model(
      [](double, double) { return 3.0; }, 3);
  CHECK(model.kappa == Catch::Approx(3.0).epsilon(1e-14));
  CHECK(model.modes[0].kind == ModeKind::constant);
  CHECK(model.sigma(0) == Catch::Approx(3.0).epsilon(1e-12));
  for (int i = 1; i < model.size(); ++i)
    CHECK(model.sigma(i) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("fourier model rejects non-invariant kernels", "[spectral]") {
  REQUIRE_THROWS_WITH(
      circle_fourier_model(
          [](double t1, double t2) { return std::cos(t1) * std::cos(t2); }, 2),
      Catch::Matchers::ContainsSubstring("rotation"));
}

TEST_CASE("profile-based model needs enough grid for the top frequency",
          "[spectral]") {
  Vec coarse = Vec::Ones(8);
  REQUIRE_THROWS_WITH(circle_fourier_model_from_profile(coarse, 4),
                      Catch::Matchers::ContainsSubstring("coarse"));
  REQUIRE_NOTHROW(circle_fourier_model_from_profile(coarse, 1));
}

TEST_CASE("erf circle spectrum matches frozen quadrature values",
          "[spectral]") {
  const SpectrumModel model = circle_fourier_model(
      [](double t1, double t2) { return erf_circle_profile(t1 - t2); }, 10);
  CHECK(model.kappa == Catch::Approx(2.4391608337585082).epsilon(1e-12));
  CHECK(model.sigma_of_freq(0) ==
        Catch::Approx(1.6205731809213018).epsilon(1e-10));
  CHECK(model.sigma_of_freq(1) ==
        Catch::Approx(0.34297623674577579).epsilon(1e-10));
  CHECK(model.sigma_of_freq(2) ==
        Catch::Approx(0.044410362468915719).epsilon(1e-10));
  CHECK(model.sigma_of_freq(3) ==
        Catch::Approx(0.015074852842316512).epsilon(1e-10));
  CHECK(model.sigma_of_freq(4) ==
        Catch::Approx(0.0044987278192766465).epsilon(1e-9));
  CHECK(model.sigma_of_freq(5) ==
        Catch::Approx(0.0015301680790778174).epsilon(1e-9));

  // Ordering: the constant mode dominates, then frequency pairs in order.
  CHECK(model.modes[0].kind == ModeKind::constant);
  CHECK(model.modes[1].freq == 1);
  for (int i = 1; i < model.size(); ++i)
    CHECK(model.sigma(i) <= model.sigma(i - 1) + 1e-15);

  // Mercer consistency: the retained trace sits just below kappa.
  const double gap = model.kappa - model.trace();
  CHECK(gap > 0.0);
  CHECK(gap < 1e-4);
}

TEST_CASE("mode labels and basis normalization", "[spectral]") {
  ModeInfo c0{1.0, 0, ModeKind::constant};
  ModeInfo c2{0.5, 2, ModeKind::cosine};
  ModeInfo s3{0.25, 3, ModeKind::sine};
  CHECK(c0.label() == "const");
  CHECK(c2.label() == "cos_2");
  CHECK(s3.label() == "sin_3");
  CHECK(c0.eval(1.7) == 1.0);
  CHECK(c2.eval(0.0) == Catch::Approx(std::numbers::sqrt2).epsilon(1e-15));

  // Orthonormality under the midpoint quadrature inner product.
  const Vec grid = circle_eval_angles(256);
  std::vector<ModeInfo> modes{{0, 0, ModeKind::constant},
                              {0, 1, ModeKind::cosine},
                              {0, 1, ModeKind::sine},
                              {0, 4, ModeKind::cosine},
                              {0, 5, ModeKind::sine}};
  for (std::size_t i = 0; i < modes.size(); ++i) {
    Vec vi(grid.size());
    for (Eigen::Index g = 0; g < grid.size(); ++g)
      vi(g) = modes[i].eval(grid(g));
    for (std::size_t j = 0; j < modes.size(); ++j) {
      const double ip = circle_mode_inner(vi, grid, modes[j]);
      CHECK(ip == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-12));
    }
  }
}

TEST_CASE("nystrom extension is consistent on equispaced circle data",
          "[spectral]") {
  const int n = 64;
  const Vec angles = circle_eval_angles(n);
  const Mat X = circle_points_from_angles(angles);
  const GramPair g =
      make_gram_pair(erf_ntk_matrix(X), 0.0, KernelTag::analytic_inf);
  const EigenSystem sys = eig_gram(g);

  CHECK(nystrom_consistency_error(sys, g, 5) <= 1e-8);

  // Pointwise route agrees with the batch route.
  const Vec row = g.H.row(3).transpose();
  const Mat batch = nystrom_extend(sys, row.transpose(), 3);
  for (int i = 0; i < 3; ++i)
    CHECK(nystrom_eval(sys, row, i) ==
          Catch::Approx(batch(0, i)).epsilon(1e-12));

  // Off-data extension reproduces the analytic eigenfunctions: compare the
  // frequency-1 eigenspace energy on a fresh grid against the sampled modes.
  const Vec grid_angles = circle_eval_angles(128);
  const Mat grid_pts = circle_points_from_angles(grid_angles);
  Mat K_cross(128, n);
  for (Eigen::Index i = 0; i < 128; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      K_cross(i, j) = erf_ntk_closed_form(grid_pts.row(i).transpose(),
                                          X.row(j).transpose());
  const Mat ext = nystrom_extend(sys, K_cross, 3);
  const std::vector<int> pair = eigenspace_for_frequency(sys, angles, 1);
  REQUIRE(pair.size() == 2);
  for (int idx : pair) {
    REQUIRE(idx < 3);
    const Vec v = ext.col(idx);
    const ModeInfo cos1{0, 1, ModeKind::cosine};
    const ModeInfo sin1{0, 1, ModeKind::sine};
    const double ec = circle_mode_inner(v, grid_angles, cos1);
    const double es = circle_mode_inner(v, grid_angles, sin1);
    const double energy = ec * ec + es * es;
    const double total = rn_dot(v, v);
    CHECK(energy / total >= 0.999);
  }
}

TEST_CASE("nystrom refuses eigen-directions below the stability floor",
          "[spectral]") {
  const int n = 64;
  const Mat X = circle_points_from_angles(circle_eval_angles(n));
  const GramPair g =
      make_gram_pair(erf_ntk_matrix(X), 0.0, KernelTag::analytic_inf);
  const EigenSystem sys = eig_gram(g);

  int tiny = -1;
  for (int i = 0; i < n; ++i)
    if (sys.lambdas(i) <= 1e-10) {
      tiny = i;
      break;
    }
  REQUIRE(tiny >= 0);  // the spectrum decays through the floor by freq ~20
  const Vec row = g.H.row(0).transpose();
  REQUIRE_THROWS_WITH(nystrom_eval(sys, row, tiny),
                      Catch::Matchers::ContainsSubstring("too small"));
  REQUIRE_THROWS_AS(nystrom_extend(sys, g.H, tiny + 1), std::invalid_argument);
}

TEST_CASE("eigenspace_for_frequency finds the fourier pairs", "[spectral]") {
  const int n = 64;
  const Vec angles = circle_eval_angles(n);
  const Mat X = circle_points_from_angles(angles);
  const EigenSystem sys =
      eig_gram(make_gram_pair(erf_ntk_matrix(X), 0.0, KernelTag::analytic_inf));

  const std::vector<int> zero = eigenspace_for_frequency(sys, angles, 0);
  REQUIRE(zero.size() == 1);
  CHECK(zero[0] == 0);

  const std::vector<int> one = eigenspace_for_frequency(sys, angles, 1);
  REQUIRE(one.size() == 2);
  CHECK(one[0] == 1);
  CHECK(one[1] == 2);
  // The matched eigenvalues approximate the integral-operator values.
  CHECK(sys.lambdas(one[0]) ==
        Catch::Approx(0.34297623674577579).epsilon(1e-3));
  const std::vector<int> two = eigenspace_for_frequency(sys, angles, 2);
  REQUIRE(two.size() == 2);
  CHECK(sys.lambdas(two[0]) ==
        Catch::Approx(0.044410362468915719).epsilon(1e-3));
}
