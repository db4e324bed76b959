#pragma once

/// @file recipes.hpp
/// The pinned acceptance recipes: thirteen desk-scale experiments, each a
/// pass/fail check of one identity, bound, or scaling law, with shared runs
/// cached so related criteria reuse the same trajectory.

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ntklab/experiment.hpp"

namespace ntklab {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  std::vector<std::string> details;
};

inline const char* criterion_name(int id) {
  switch (id) {
    case 1: return "training-identity reconstruction";
    case 2: return "function-space identity per mode";
    case 3: return "projected-residual bound (MC reference)";
    case 4: return "spectral-bias ordering and rates";
    case 5: return "init-kernel concentration in width";
    case 6: return "kernel drift shrinks with width";
    case 7: return "parameter-norm envelopes";
    case 8: return "antisymmetric init cancels the initial output";
    case 9: return "empirical spectrum matches the analytic model";
    case 10: return "out-of-span energy decays with sample size";
    case 11: return "wide-limit trajectory tracking";
    case 12: return "parameter gradients match finite differences";
    case 13: return "byte-identical reruns";
  }
  return "unknown";
}

/// Wall-clock budget in seconds for the timed criteria (0 = untimed).
inline double criterion_budget(int id) {
  switch (id) {
    case 1: return 30.0;
    case 2: return 300.0;
    case 3: return 300.0;
    case 4: return 300.0;
    default: return 0.0;
  }
}

namespace detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return std::string(buf);
}

inline double loglog_slope(const std::vector<double>& x,
                           const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

inline ExperimentConfig recipe_identity_desk() {
  ExperimentConfig c;
  c.name = "identity-desk";
  c.seed = 101;
  c.m = 32;
  c.act = Activation::tanh;
  c.family = InitFamily::gaussian;
  c.scheme = InitScheme::doubling;
  c.n = 8;
  c.target_modes = {1, 3, 5};
  c.target_coeffs = {1.0, 1.0, 1.0};
  c.T = 5.0;
  c.dense_count = 129;
  c.snapshots = {SnapshotSchedule::Kind::dense_stride, 16};
  c.grid_count = 64;
  c.verify_training_identity = true;
  return c;
}

inline ExperimentConfig recipe_mode_identity() {
  ExperimentConfig c;
  c.name = "mode-identity";
  c.seed = 202;
  c.m = 512;
  c.act = Activation::erf;
  c.family = InitFamily::gaussian;
  c.scheme = InitScheme::doubling;
  c.n = 256;
  c.target_modes = {1, 3, 5};
  c.target_coeffs = {1.0, 1.0, 1.0};
  c.T = 10.0;
  c.dense_count = 129;
  c.snapshots = {SnapshotSchedule::Kind::dense_stride, 16};
  c.grid_count = 512;
  c.record_cross = true;
  c.use_closed_form = true;
  c.verify_function_identity = true;
  c.top_mode_count = 3;
  return c;
}

inline ExperimentConfig recipe_spectral_bias() {
  ExperimentConfig c;
  c.name = "spectral-bias";
  c.seed = 404;
  c.m = 512;
  c.act = Activation::erf;
  c.family = InitFamily::gaussian;
  c.scheme = InitScheme::doubling;
  c.n = 256;
  c.target_modes = {1, 3, 5};
  c.target_coeffs = {1.0, 1.0, 1.0};
  c.T = 400.0;
  c.dense_count = 513;
  c.snapshots = {SnapshotSchedule::Kind::dense_stride, 16};
  c.grid_count = 512;
  c.use_closed_form = true;
  return c;
}

inline ExperimentConfig recipe_drift_width(int m) {
  ExperimentConfig c;
  c.name = "drift-width-" + std::to_string(m);
  c.seed = 606;
  c.m = m;
  c.act = Activation::tanh;
  c.family = InitFamily::gaussian;
  c.scheme = InitScheme::doubling;
  c.n = 32;
  c.target_modes = {1, 3, 5};
  c.target_coeffs = {1.0, 1.0, 1.0};
  c.T = 2.0;
  c.dense_count = 65;
  c.snapshots = {SnapshotSchedule::Kind::dense_stride, 16};
  c.grid_count = 16;
  c.drift_grid_count = 20;
  return c;
}

/// Caches the shared acceptance runs so criteria that interrogate the same
/// trajectory do not recompute it.
class AcceptanceContext {
 public:
  const RunArtifacts& identity_run() {
    if (!r1_) r1_ = run_experiment(recipe_identity_desk());
    return *r1_;
  }
  const RunArtifacts& identity_run_fine() {
    if (!r1f_) {
      ExperimentConfig c = recipe_identity_desk();
      c.name = "identity-desk-fine";
      c.dense_count = 513;            // quarter the dense spacing ...
      c.snapshots.count = 64;         // ... keeping snapshots on every 8th node
      r1f_ = run_experiment(c);
    }
    return *r1f_;
  }
  const RunArtifacts& mode_run() {
    if (!r2_) r2_ = run_experiment(recipe_mode_identity());
    return *r2_;
  }
  const RunArtifacts& bias_run() {
    if (!r4_) r4_ = run_experiment(recipe_spectral_bias());
    return *r4_;
  }
  const RunArtifacts& drift_run(int i) {
    static const std::array<int, 3> widths = {64, 256, 1024};
    if (!r6_[static_cast<std::size_t>(i)])
      r6_[static_cast<std::size_t>(i)] =
          run_experiment(recipe_drift_width(widths.at(static_cast<std::size_t>(i))));
    return *r6_[static_cast<std::size_t>(i)];
  }

 private:
  std::optional<RunArtifacts> r1_, r1f_, r2_, r4_;
  std::array<std::optional<RunArtifacts>, 3> r6_;
};

namespace detail {

inline CriterionResult c01(AcceptanceContext& ctx) {
  CriterionResult r;
  const RunArtifacts& base = ctx.identity_run();
  const double max_res = base.training_identity->max_identity_residual();
  const double tol = 1e-4 * base.traj.r0_norm();
  r.details.push_back("max identity residual " + fmt(max_res) +
                      " vs tolerance " + fmt(tol));
  const RunArtifacts& fine = ctx.identity_run_fine();
  const double max_fine = fine.training_identity->max_identity_residual();
  const double ratio = max_res / std::max(max_fine, 1e-300);
  r.details.push_back("quartered dense spacing: residual " + fmt(max_fine) +
                      ", improvement factor " + fmt(ratio) + " (need >= 8)");
  r.pass = max_res <= tol && ratio >= 8.0;
  return r;
}

inline CriterionResult c02(AcceptanceContext& ctx) {
  CriterionResult r;
  const RunArtifacts& art = ctx.mode_run();
  r.pass = true;
  for (const auto& mr : art.function_identity->modes) {
    r.details.push_back("mode " + mr.label + ": |<r0,phi>| = " +
                        fmt(std::fabs(mr.r0_coeff)) + ", relative residual " +
                        fmt(mr.relative_residual) + " (tol 1e-3)");
    if (!(mr.relative_residual <= 1e-3)) r.pass = false;
  }
  if (art.function_identity->modes.size() != 3) r.pass = false;
  return r;
}

inline CriterionResult c03(AcceptanceContext& ctx) {
  CriterionResult r;
  const RunArtifacts& art = ctx.mode_run();
  const ExperimentConfig& cfg = art.cfg;
  const AnalyticKernelEstimate est =
      analytic_ntk_mc(cfg.m, cfg.d, cfg.act, cfg.family, cfg.scheme,
                      art.data.X, 1024, cfg.seed);
  const GramPair ghat = make_gram_pair(
      Mat(0.5 * (est.values + est.values.transpose())), 0.0,
      KernelTag::analytic_inf);
  std::vector<int> ks;
  for (int k = 1; k <= 10; ++k) ks.push_back(k);
  const CorollaryBoundResult res = corollary_bound_check(art.traj, ghat, ks);
  r.details.push_back("sup_s ||G_hat - G_s||_op = " +
                      fmt(res.sup_op_deviation) + ", ||r0|| = " +
                      fmt(res.r0_norm) + ", MC seeds = 1024");
  r.pass = res.all_pass;
  for (const auto& pk : res.per_k)
    r.details.push_back("k=" + std::to_string(pk.k) + ": lambda " +
                        fmt(pk.lambda_k) + ", measured " + fmt(pk.max_measured) +
                        ", bound " + fmt(pk.max_bound) +
                        (pk.pass ? "" : "  VIOLATED"));
  return r;
}

inline CriterionResult c04(AcceptanceContext& ctx) {
  CriterionResult r;
  const RunArtifacts& art = ctx.bias_run();
  const Trajectory& traj = art.traj;
  const SpectrumModel model = build_circle_model(art.cfg);

  const GramPair g_inf = make_gram_pair(erf_ntk_matrix(art.data.X), 0.0,
                                        KernelTag::analytic_inf);
  const EigenSystem sys = eig_gram(g_inf);
  double sup_dev = 0.0;
  for (const GramPair& g : traj.gram_snapshots)
    sup_dev = std::max(sup_dev, power_iteration_opnorm(Mat(g_inf.G - g.G)));
  r.details.push_back("sup_s ||G_inf - G_s||_op = " + fmt(sup_dev) +
                      " (rate check binds only for lambda_k >= " +
                      fmt(10.0 * sup_dev) + ")");

  bool ordering = true;
  bool rates_ok = true;
  double prev_half = -1.0;
  for (const int freq : art.cfg.target_modes) {
    ModeInfo mode{model.sigma_of_freq(freq), freq, ModeKind::cosine};
    std::vector<double> energy(traj.times.size());
    for (std::size_t i = 0; i < traj.times.size(); ++i)
      energy[i] = std::fabs(circle_mode_inner(
          traj.test_residuals.row(static_cast<Eigen::Index>(i)).transpose(),
          art.grid_angles, mode));
    const double half = half_crossing_time(traj.times, energy);
    // lambda for this mode's empirical eigenspace (pair average).
    const std::vector<int> space =
        eigenspace_for_frequency(sys, art.data_angles, freq);
    double lam = 0.0;
    for (int idx : space) lam += sys.lambdas(idx);
    lam /= static_cast<double>(space.size());

    std::string line = "mode cos_" + std::to_string(freq) + ": lambda " +
                       fmt(lam) + ", half-energy time " + fmt(half);
    if (lam >= 10.0 * sup_dev) {
      const RateFit fit = rate_fit(traj.times, energy);
      line += ", fitted rate " + fmt(fit.rate) + " (must be within 15%)";
      if (std::fabs(fit.rate - lam) > 0.15 * lam) rates_ok = false;
    } else {
      line += ", rate check vacuous at this width";
    }
    r.details.push_back(line);
    if (!(half > prev_half)) ordering = false;
    prev_half = half;
    if (!std::isfinite(half)) ordering = false;
  }
  r.details.push_back(std::string("half-energy times strictly increase: ") +
                      (ordering ? "yes" : "NO"));
  r.pass = ordering && rates_ok;
  return r;
}

inline CriterionResult c05(AcceptanceContext&) {
  CriterionResult r;
  const std::vector<int> widths = {64, 256, 1024, 4096};
  const int n_seeds = 256;
  const Vec grid_angles = circle_eval_angles(20);
  const Mat pts = circle_points_from_angles(grid_angles);
  const Mat k_inf = erf_ntk_matrix(pts);
  std::vector<double> xs, ys;
  for (std::size_t wi = 0; wi < widths.size(); ++wi) {
    double acc = 0.0;
    for (int s = 0; s < n_seeds; ++s) {
      const Network net = init_network(
          widths[wi], 2, InitFamily::gaussian, InitScheme::iid,
          derive_seed(505, "kinf-seed",
                      static_cast<std::uint64_t>(wi) * n_seeds +
                          static_cast<std::uint64_t>(s)));
      acc += (ntk_matrix(net, Activation::erf, pts) - k_inf)
                 .cwiseAbs()
                 .maxCoeff();
    }
    xs.push_back(static_cast<double>(widths[wi]));
    ys.push_back(acc / n_seeds);
    r.details.push_back("m = " + std::to_string(widths[wi]) +
                        ": mean sup |K_0 - K_inf| = " + fmt(ys.back()));
  }
  const double slope = loglog_slope(xs, ys);
  r.details.push_back("log-log slope " + fmt(slope) +
                      " (expected near -0.5, accepted [-0.65, -0.35])");
  bool decreasing = true;
  for (std::size_t i = 1; i < ys.size(); ++i)
    if (!(ys[i] < ys[i - 1])) decreasing = false;
  r.pass = decreasing && slope >= -0.65 && slope <= -0.35;
  return r;
}

inline CriterionResult c06(AcceptanceContext& ctx) {
  (void)ctx;
  CriterionResult r;
  // The per-seed sup statistic is heavy-tailed, so each width averages the
  // fixed-time drift over 16 matched seeds; the ladder means are stable to
  // a few percent, making the fitted slope a faithful measurement.
  const int n_seeds = 16;
  std::vector<double> xs, ys;
  for (int m : {64, 256, 1024}) {
    double acc = 0.0;
    for (int s = 0; s < n_seeds; ++s) {
      ExperimentConfig c = recipe_drift_width(m);
      c.seed = 606 + static_cast<std::uint64_t>(s);
      c.verify_envelopes = false;
      const RunArtifacts art = run_experiment(c);
      const auto& d = art.traj.drift_snapshots;
      acc += (d.back() - d.front()).cwiseAbs().maxCoeff();
    }
    xs.push_back(static_cast<double>(m));
    ys.push_back(acc / n_seeds);
    r.details.push_back("m = " + std::to_string(m) +
                        ": mean sup |K_t - K_0| at t = 2 over " +
                        std::to_string(n_seeds) + " seeds = " + fmt(ys.back()));
  }
  const double slope = loglog_slope(xs, ys);
  bool decreasing = true;
  for (std::size_t i = 1; i < ys.size(); ++i)
    if (!(ys[i] < ys[i - 1])) decreasing = false;
  r.details.push_back("log-log slope " + fmt(slope) +
                      " (expected near -0.5, accepted [-0.8, -0.3])");
  r.details.push_back(std::string("drift decreases monotonically with width: ") +
                      (decreasing ? "yes" : "no"));
  r.details.push_back(
      std::string("consistent with the <= C/sqrt(m) envelope (slope <= -0.35): ") +
      (slope <= -0.35 ? "yes" : "no"));
  r.pass = decreasing && slope >= -0.8 && slope <= -0.3;
  if (!r.pass && decreasing && slope < -0.8)
    r.details.push_back(
        "measured drift vanishes faster than the pinned band: the per-unit "
        "kernel derivatives have zero mean at init, so their average gains "
        "an extra 1/sqrt(m) beyond the movement bound, giving ~1/m in "
        "practice; the upper-rate prediction holds but the two-sided band "
        "does not");
  return r;
}

inline CriterionResult c07(AcceptanceContext& ctx) {
  CriterionResult r;
  r.pass = true;
  const std::array<const RunArtifacts*, 4> runs = {
      &ctx.identity_run(), &ctx.mode_run(), &ctx.bias_run(), &ctx.drift_run(2)};
  for (const RunArtifacts* art : runs) {
    const bool ok = art->envelopes && art->envelopes->pass;
    double worst = 0.0;
    if (art->envelopes)
      for (std::size_t i = 0; i < art->envelopes->times.size(); ++i)
        worst = std::max(worst, art->envelopes->xi[i] /
                                    art->envelopes->xi_envelope[i]);
    r.details.push_back(art->cfg.name + ": xi within envelope " +
                        (ok ? "yes" : "NO") + " (worst ratio " + fmt(worst) +
                        ")");
    if (!ok) r.pass = false;
  }
  return r;
}

inline CriterionResult c08(AcceptanceContext&) {
  CriterionResult r;
  r.pass = true;
  const Mat grid = circle_points_from_angles(circle_eval_angles(100));
  const std::array<Activation, 4> acts = {Activation::softplus, Activation::tanh,
                                          Activation::sigmoid, Activation::erf};
  double worst = 0.0;
  for (std::size_t ai = 0; ai < acts.size(); ++ai)
    for (int s = 0; s < 10; ++s) {
      const Network net =
          init_network(256, 2, InitFamily::gaussian, InitScheme::doubling,
                       derive_seed(808, "doubling-seed",
                                   static_cast<std::uint64_t>(ai) * 10 +
                                       static_cast<std::uint64_t>(s)));
      worst = std::max(
          worst,
          forward_batch(net, acts[ai], grid).cwiseAbs().maxCoeff());
    }
  for (const InitFamily fam : {InitFamily::uniform, InitFamily::rademacher}) {
    const Network net = init_network(256, 2, fam, InitScheme::doubling,
                                     derive_seed(808, "doubling-family"));
    worst = std::max(
        worst, forward_batch(net, Activation::tanh, grid).cwiseAbs().maxCoeff());
  }
  r.details.push_back("max |f(.; theta_0)| over 100-point grid, 4 activations "
                      "x 10 seeds (+2 families): " + fmt(worst) +
                      " (tol 1e-12)");
  if (!(worst <= 1e-12)) r.pass = false;

  BandlimitedTarget target{{1, 3, 5}, {1.0, 1.0, 1.0}};
  const Dataset data =
      make_circle_dataset(64, target, derive_seed(808, "data"));
  const Network net = init_network(256, 2, InitFamily::gaussian,
                                   InitScheme::doubling, 808);
  const Vec r0 = residual(net, Activation::tanh, data.X, data.y);
  const double rel =
      std::fabs(rn_norm(r0) - rn_norm(data.y)) / rn_norm(data.y);
  r.details.push_back("| ||r(0)|| - ||y|| | / ||y|| = " + fmt(rel) +
                      " (tol 1e-12)");
  if (!(rel <= 1e-12)) r.pass = false;
  return r;
}

inline CriterionResult c09(AcceptanceContext&) {
  CriterionResult r;
  r.pass = true;
  const int n = 512;
  const Vec angles = circle_angles(n, derive_seed(909, "data"));
  const Mat X = circle_points_from_angles(angles);
  const GramPair g =
      make_gram_pair(erf_ntk_matrix(X), 0.0, KernelTag::analytic_inf);
  const EigenSystem sys = eig_gram(g);
  const SpectrumModel model = build_circle_model([] {
    ExperimentConfig c;
    c.act = Activation::erf;
    c.use_closed_form = true;
    c.max_freq = 10;
    return c;
  }());

  const double consistency = nystrom_consistency_error(sys, g, 5);
  r.details.push_back("on-data extension consistency: " + fmt(consistency) +
                      " (tol 1e-8)");
  if (!(consistency <= 1e-8)) r.pass = false;

  const Vec fine_angles = circle_eval_angles(512);
  const Mat fine = circle_points_from_angles(fine_angles);
  Mat k_cross(fine.rows(), X.rows());
  for (Eigen::Index i = 0; i < fine.rows(); ++i)
    for (Eigen::Index j = 0; j < X.rows(); ++j)
      k_cross(i, j) =
          erf_ntk_closed_form(fine.row(i).transpose(), X.row(j).transpose());
  const Mat ext = nystrom_extend(sys, k_cross, 5);

  for (const int freq : {0, 1, 2}) {
    const double sigma = model.sigma_of_freq(freq);
    const std::vector<int> space = eigenspace_for_frequency(sys, angles, freq);
    for (const int idx : space) {
      if (idx >= 5) {
        r.details.push_back("frequency " + std::to_string(freq) +
                            " eigenspace left the top-5 block");
        r.pass = false;
        continue;
      }
      const double lam = sys.lambdas(idx);
      const double rel = std::fabs(lam - sigma) / sigma;
      const Vec v = ext.col(idx);
      double energy = 0.0;
      if (freq == 0) {
        const double c0 =
            circle_mode_inner(v, fine_angles, {sigma, 0, ModeKind::constant});
        energy = c0 * c0;
      } else {
        const double cc =
            circle_mode_inner(v, fine_angles, {sigma, freq, ModeKind::cosine});
        const double cs =
            circle_mode_inner(v, fine_angles, {sigma, freq, ModeKind::sine});
        energy = cc * cc + cs * cs;
      }
      const double corr = std::sqrt(energy / rn_dot(v, v));
      r.details.push_back("freq " + std::to_string(freq) + " (index " +
                          std::to_string(idx) + "): lambda " + fmt(lam) +
                          " vs sigma " + fmt(sigma) + " (rel " + fmt(rel) +
                          ", tol 0.10); extension correlation " + fmt(corr) +
                          " (need >= 0.99)");
      if (!(rel <= 0.10) || !(corr >= 0.99)) r.pass = false;
    }
  }
  return r;
}

inline CriterionResult c10(AcceptanceContext&) {
  CriterionResult r;
  const BandlimitedTarget target{{1}, {1.0}};
  std::vector<double> xs, ys;
  for (const int n : {128, 256, 512}) {
    double acc = 0.0;
    for (int s = 0; s < 8; ++s) {
      const Vec angles = circle_angles(
          n, derive_seed(1010, "participation",
                         static_cast<std::uint64_t>(n) * 100 +
                             static_cast<std::uint64_t>(s)));
      const Mat X = circle_points_from_angles(angles);
      const Vec y = target.eval_angles(angles);
      const EigenSystem sys = eig_gram(
          make_gram_pair(erf_ntk_matrix(X), 0.0, KernelTag::analytic_inf));
      acc += bottom_participation(y, sys, 3);
    }
    xs.push_back(static_cast<double>(n));
    ys.push_back(acc / 8.0);
    r.details.push_back("n = " + std::to_string(n) +
                        ": mean out-of-span energy " + fmt(ys.back()));
  }
  const double slope = loglog_slope(xs, ys);
  r.details.push_back("log-log slope " + fmt(slope) +
                      " (expected near -0.5, accepted [-0.75, -0.25])");
  bool decreasing = true;
  for (std::size_t i = 1; i < ys.size(); ++i)
    if (!(ys[i] < ys[i - 1])) decreasing = false;
  r.pass = decreasing && slope >= -0.75 && slope <= -0.25;
  return r;
}

inline CriterionResult c11(AcceptanceContext&) {
  CriterionResult r;
  ExperimentConfig c;
  c.name = "wide-tracking";
  c.seed = 1111;
  c.m = 4096;
  c.act = Activation::tanh;
  c.family = InitFamily::gaussian;
  c.scheme = InitScheme::doubling;
  c.n = 8;
  c.target_modes = {1, 3, 5};
  c.target_coeffs = {1.0, 1.0, 1.0};
  c.T = 2.0;
  c.dense_count = 129;
  c.snapshots = {SnapshotSchedule::Kind::dense_stride, 16};
  c.grid_count = 16;
  const RunArtifacts art = run_experiment(c);
  const SymExpFlow flow(art.traj.gram_snapshots.front().G);
  const Vec r0 = art.traj.r0();
  double sup = 0.0;
  for (std::size_t i = 0; i < art.traj.times.size(); ++i)
    sup = std::max(
        sup, rn_norm(Vec(art.traj.residual_at(static_cast<int>(i)) -
                         flow.apply(r0, art.traj.times[i]))));
  const double tol = 0.05 * art.traj.r0_norm();
  r.details.push_back("sup_t ||r(t) - exp(-G_0 t) r(0)|| = " + fmt(sup) +
                      " vs 0.05 ||r(0)|| = " + fmt(tol) + " at m = 4096");
  r.pass = sup <= tol;
  return r;
}

inline CriterionResult c12(AcceptanceContext&) {
  CriterionResult r;
  r.pass = true;
  const std::array<Activation, 4> acts = {Activation::softplus, Activation::tanh,
                                          Activation::sigmoid, Activation::erf};
  const double h = 1e-5;
  for (std::size_t ai = 0; ai < acts.size(); ++ai) {
    const Network net = init_network(8, 3, InitFamily::gaussian,
                                     InitScheme::iid,
                                     derive_seed(1212, "fd-net", ai));
    const Mat xs = sphere_points(1, 3, derive_seed(1212, "fd-point", ai));
    const Vec x = xs.row(0).transpose();
    const Vec grad = param_gradient(net, acts[ai], x);
    std::mt19937_64 rng = make_engine(derive_seed(1212, "fd-dir", ai));
    double worst = 0.0;
    for (int dir = 0; dir < 20; ++dir) {
      Vec v(net.p());
      fill_unit_variance(InitFamily::gaussian, rng, v.data(), v.size());
      v /= l2_norm(v);
      Network plus = net, minus = net;
      plus.theta += h * v;
      minus.theta -= h * v;
      const double fd = (forward(plus, acts[ai], x) -
                         forward(minus, acts[ai], x)) /
                        (2.0 * h);
      const double an = pairwise_dot(grad, v);
      worst = std::max(worst,
                       std::fabs(fd - an) / std::max(1e-6, std::fabs(an)));
    }
    r.details.push_back(to_string(acts[ai]) +
                        ": worst relative gradient error over 20 directions " +
                        fmt(worst) + " (tol 1e-5)");
    if (!(worst <= 1e-5)) r.pass = false;
  }
  return r;
}

inline CriterionResult c13(AcceptanceContext&) {
  namespace fs = std::filesystem;
  CriterionResult r;
  ExperimentConfig c;
  c.name = "determinism";
  c.seed = 7;
  c.m = 16;
  c.act = Activation::tanh;
  c.family = InitFamily::gaussian;
  c.scheme = InitScheme::doubling;
  c.n = 8;
  c.target_modes = {1, 2};
  c.target_coeffs = {1.0, 0.5};
  c.T = 1.0;
  c.dense_count = 33;
  c.snapshots = {SnapshotSchedule::Kind::dense_stride, 4};
  c.grid_count = 16;
  c.drift_grid_count = 8;
  c.mc_seeds = 32;
  c.verify_training_identity = true;
  c.verify_corollary = true;
  c.corollary_k = {1, 2, 3};

  const fs::path base = fs::temp_directory_path() / "ntklab-acceptance";
  const fs::path dir_a = base / "determinism_a";
  const fs::path dir_b = base / "determinism_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  export_run(run_experiment(c), dir_a.string());
  export_run(run_experiment(c), dir_b.string());

  std::vector<std::string> rel_a;
  for (const auto& entry : fs::recursive_directory_iterator(dir_a))
    if (entry.is_regular_file())
      rel_a.push_back(fs::relative(entry.path(), dir_a).string());
  std::sort(rel_a.begin(), rel_a.end());

  r.pass = true;
  int mismatches = 0;
  for (const std::string& rel : rel_a) {
    const fs::path pb = dir_b / rel;
    if (!fs::exists(pb) ||
        read_text((dir_a / rel).string()) != read_text(pb.string())) {
      ++mismatches;
      r.details.push_back("mismatch: " + rel);
      r.pass = false;
    }
  }
  std::size_t count_b = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir_b))
    if (entry.is_regular_file()) ++count_b;
  if (count_b != rel_a.size()) {
    r.details.push_back("file count differs between reruns");
    r.pass = false;
  }
  r.details.push_back(std::to_string(rel_a.size()) +
                      " files compared, " + std::to_string(mismatches) +
                      " mismatches");
  return r;
}

}  // namespace detail

inline CriterionResult run_criterion(int id, AcceptanceContext& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  CriterionResult r;
  switch (id) {
    case 1: r = detail::c01(ctx); break;
    case 2: r = detail::c02(ctx); break;
    case 3: r = detail::c03(ctx); break;
    case 4: r = detail::c04(ctx); break;
    case 5: r = detail::c05(ctx); break;
    case 6: r = detail::c06(ctx); break;
    case 7: r = detail::c07(ctx); break;
    case 8: r = detail::c08(ctx); break;
    case 9: r = detail::c09(ctx); break;
    case 10: r = detail::c10(ctx); break;
    case 11: r = detail::c11(ctx); break;
    case 12: r = detail::c12(ctx); break;
    case 13: r = detail::c13(ctx); break;
    default: throw std::invalid_argument("criterion id must be 1..13");
  }
  r.id = id;
  r.name = criterion_name(id);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                  .count();
  const double budget = criterion_budget(id);
  if (budget > 0.0) {
    r.details.push_back("elapsed " + detail::fmt(r.seconds) + " s (budget " +
                        detail::fmt(budget) + " s)");
    if (r.seconds > budget) r.pass = false;
  }
  return r;
}

}  // namespace ntklab
