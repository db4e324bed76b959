#pragma once

/// @file experiment.hpp
/// Runs one configured experiment end to end (data, init, flow, kernel
/// references, verifications) and exports the artifacts in deterministic
/// formats: the same config and seed produce byte-identical output trees.

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ntklab/bounds.hpp"
#include "ntklab/config.hpp"
#include "ntklab/csvio.hpp"
#include "ntklab/deviations.hpp"
#include "ntklab/svg.hpp"

namespace ntklab {

struct RunArtifacts {
  ExperimentConfig cfg;
  Vec data_angles;
  Dataset data;
  Vec grid_angles;
  Mat eval_grid;
  Vec grid_targets;
  Network net0;
  Trajectory traj;
  std::optional<SpectrumModel> model;
  std::optional<GramPair> g_inf;           ///< analytic kernel on the data
  std::optional<AnalyticKernelEstimate> g_inf_mc;
  std::optional<TrainingIdentityResult> training_identity;
  std::optional<FunctionIdentityResult> function_identity;
  std::optional<CorollaryBoundResult> corollary;
  std::optional<XiEnvelopeResult> envelopes;
  std::map<std::string, double> metrics;

  /// True when every enabled verification passed its own criterion.
  bool verifications_pass() const {
    if (corollary && !corollary->all_pass) return false;
    if (envelopes && !envelopes->pass) return false;
    return true;
  }
};

namespace detail {

inline double trajectory_sup_drift(const Trajectory& traj) {
  if (traj.drift_snapshots.empty()) return 0.0;
  double sup = 0.0;
  for (std::size_t s = 1; s < traj.drift_snapshots.size(); ++s)
    sup = std::max(sup, (traj.drift_snapshots[s] - traj.drift_snapshots[0])
                            .cwiseAbs()
                            .maxCoeff());
  return sup;
}

}  // namespace detail

/// Builds the analytic-kernel spectrum model for a run: the closed form for
/// erf under gaussian init, otherwise a Monte-Carlo profile estimate (valid
/// for gaussian rows, whose expected kernel is rotation invariant).
inline SpectrumModel build_circle_model(const ExperimentConfig& cfg) {
  if (cfg.use_closed_form) {
    const auto kernel_on_angles = [](double t1, double t2) {
      Vec x(2), y(2);
      x << std::cos(t1), std::sin(t1);
      y << std::cos(t2), std::sin(t2);
      return erf_ntk_closed_form(x, y);
    };
    return circle_fourier_model(kernel_on_angles, cfg.max_freq);
  }
  if (cfg.family != InitFamily::gaussian)
    throw ConfigError("kernel.closed_form",
                      "without the closed form, the spectrum model needs "
                      "gaussian init (rotation-invariant expected kernel)");
  const auto [profile, se] = circle_profile_mc(
      cfg.m, cfg.act, cfg.family, cfg.scheme, 4096, cfg.mc_seeds, cfg.seed);
  (void)se;
  return circle_fourier_model_from_profile(profile, cfg.max_freq);
}

inline RunArtifacts run_experiment(const ExperimentConfig& cfg) {
  RunArtifacts art;
  art.cfg = cfg;
  const BandlimitedTarget target = cfg.target();

  art.data_angles = circle_angles(cfg.n, derive_seed(cfg.seed, "data"),
                                  cfg.sampling);
  art.data.X = circle_points_from_angles(art.data_angles);
  art.data.y = target.eval_angles(art.data_angles);

  art.net0 = init_network(cfg.m, cfg.d, cfg.family, cfg.scheme, cfg.seed);

  art.grid_angles = circle_eval_angles(cfg.grid_count);
  art.eval_grid = circle_points_from_angles(art.grid_angles);
  art.grid_targets = target.eval_angles(art.grid_angles);

  FlowOptions fopt;
  fopt.ode = cfg.ode;
  fopt.T = cfg.T;
  fopt.dense_count = cfg.dense_count;
  fopt.snapshots = cfg.snapshots;
  fopt.eval_grid = art.eval_grid;
  fopt.eval_grid_targets = art.grid_targets;
  fopt.record_cross = cfg.record_cross;
  if (cfg.drift_grid_count > 0)
    fopt.drift_grid = circle_points_from_angles(
        circle_eval_angles(cfg.drift_grid_count));

  art.traj = integrate_flow(art.net0, cfg.act, art.data, fopt);

  if (cfg.verify_corollary) {
    if (cfg.use_closed_form) {
      art.g_inf = make_gram_pair(erf_ntk_matrix(art.data.X), 0.0,
                                 KernelTag::analytic_inf);
    } else {
      art.g_inf_mc = analytic_ntk_mc(cfg.m, cfg.d, cfg.act, cfg.family,
                                     cfg.scheme, art.data.X, cfg.mc_seeds,
                                     cfg.seed);
      art.g_inf = make_gram_pair(
          Mat(0.5 * (art.g_inf_mc->values + art.g_inf_mc->values.transpose())),
          0.0, KernelTag::analytic_inf);
    }
  }
  if (cfg.verify_function_identity) art.model = build_circle_model(cfg);

  auto& mets = art.metrics;
  mets["r0_norm"] = art.traj.r0_norm();
  mets["final_residual"] =
      rn_norm(art.traj.residual_at(static_cast<int>(art.traj.times.size()) - 1));
  mets["xi_final"] = art.traj.xi_series(art.traj.xi_series.size() - 1);
  mets["xi_tilde_final"] =
      art.traj.xi_tilde_series(art.traj.xi_tilde_series.size() - 1);
  if (cfg.drift_grid_count > 0)
    mets["sup_drift"] = detail::trajectory_sup_drift(art.traj);

  if (cfg.verify_training_identity) {
    art.training_identity =
        verify_training_identity(art.traj, art.traj.gram_snapshots.front());
    mets["identity_max_residual"] = art.training_identity->max_identity_residual();
    mets["identity_rel_residual"] =
        art.training_identity->max_identity_residual() /
        art.training_identity->r0_norm;
    mets["sup_op_deviation"] = art.training_identity->sup_op_deviation;
  }
  if (cfg.verify_function_identity) {
    const std::vector<int> idx = top_modes_by_initial_coefficient(
        *art.model, art.traj.test_residuals.row(0).transpose(),
        art.grid_angles, cfg.top_mode_count);
    art.function_identity = verify_function_identity(
        art.traj, *art.model, art.grid_angles, art.data_angles, idx,
        /*quadrature_exact=*/true);
    double worst = 0.0;
    for (const auto& mr : art.function_identity->modes)
      worst = std::max(worst, mr.relative_residual);
    mets["mode_rel_residual_max"] = worst;
  }
  if (cfg.verify_corollary) {
    std::vector<int> ks = cfg.corollary_k;
    if (ks.empty())
      for (int k = 1; k <= std::min(10, cfg.n); ++k) ks.push_back(k);
    art.corollary = corollary_bound_check(art.traj, *art.g_inf, ks);
    mets["corollary_pass"] = art.corollary->all_pass ? 1.0 : 0.0;
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& r : art.corollary->per_k)
      worst = std::max(worst, r.worst_margin);
    mets["corollary_worst_margin"] = worst;
  }
  if (cfg.verify_envelopes) {
    double radius = 0.0;
    for (Eigen::Index i = 0; i < art.data.X.rows(); ++i)
      radius = std::max(radius, art.data.X.row(i).norm());
    const double D = activation_constants(cfg.act, radius).D;
    art.envelopes = xi_envelope_check(art.traj, D);
    mets["envelope_pass"] = art.envelopes->pass ? 1.0 : 0.0;
  }
  return art;
}

namespace detail {

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return std::string(buf);
}

inline nlohmann::json deviations_json(const RunArtifacts& art) {
  nlohmann::json j;
  if (art.training_identity) {
    const auto& ti = *art.training_identity;
    j["training_identity"] = {
        {"max_residual", ti.max_identity_residual()},
        {"relative_residual", ti.max_identity_residual() / ti.r0_norm},
        {"r0_norm", ti.r0_norm},
        {"sup_op_deviation", ti.sup_op_deviation},
        {"checkpoints", ti.times.size()},
    };
  }
  if (art.function_identity) {
    nlohmann::json modes = nlohmann::json::array();
    for (const auto& mr : art.function_identity->modes)
      modes.push_back({{"mode", mr.label},
                       {"sigma", mr.sigma},
                       {"initial_coefficient", mr.r0_coeff},
                       {"max_residual", mr.max_abs_residual},
                       {"relative_residual", mr.relative_residual},
                       {"mc_std_error", mr.mc_std_error}});
    j["function_identity"] = {
        {"quadrature_exact", art.function_identity->quadrature_exact},
        {"modes", modes}};
  }
  if (art.corollary) {
    nlohmann::json per_k = nlohmann::json::array();
    for (const auto& r : art.corollary->per_k)
      per_k.push_back({{"k", r.k},
                       {"lambda_k", r.lambda_k},
                       {"max_measured", r.max_measured},
                       {"bound_at_worst_time", r.max_bound},
                       {"worst_margin", r.worst_margin},
                       {"pass", r.pass}});
    j["projected_bound"] = {{"sup_op_deviation", art.corollary->sup_op_deviation},
                            {"r0_norm", art.corollary->r0_norm},
                            {"all_pass", art.corollary->all_pass},
                            {"per_k", per_k}};
  }
  if (art.envelopes) {
    double worst_ratio = 0.0;
    for (std::size_t i = 0; i < art.envelopes->times.size(); ++i)
      worst_ratio = std::max(
          worst_ratio, art.envelopes->xi[i] / art.envelopes->xi_envelope[i]);
    j["norm_envelopes"] = {{"pass", art.envelopes->pass},
                           {"worst_xi_to_envelope_ratio", worst_ratio}};
  }
  return j;
}

inline std::string deviations_markdown(const RunArtifacts& art) {
  std::string md = "# Deviation checks\n\n";
  if (art.training_identity) {
    const auto& ti = *art.training_identity;
    md += "## Training-space identity\n\n";
    md += "Reconstructs the residual trajectory from the frozen-kernel decay "
          "plus the damped correction integral at every dense time.\n\n";
    md += "- max identity residual: " +
          format_double(ti.max_identity_residual()) + "\n";
    md += "- relative to ||r(0)||: " +
          format_double(ti.max_identity_residual() / ti.r0_norm) + "\n";
    md += "- sup_s ||G_ref - G_s||_op: " + format_double(ti.sup_op_deviation) +
          "\n\n";
  }
  if (art.function_identity) {
    md += "## Function-space identity (per mode)\n\n";
    md += "| mode | sigma | <r0, phi> | max residual | relative |\n";
    md += "|------|-------|-----------|--------------|----------|\n";
    for (const auto& mr : art.function_identity->modes)
      md += "| " + mr.label + " | " + format_double(mr.sigma) + " | " +
            format_double(mr.r0_coeff) + " | " +
            format_double(mr.max_abs_residual) + " | " +
            format_double(mr.relative_residual) + " |\n";
    md += "\n";
  }
  if (art.corollary) {
    md += "## Projected-residual bound\n\n";
    md += "sup_s ||G - G_s||_op = " +
          format_double(art.corollary->sup_op_deviation) + ", ||r(0)|| = " +
          format_double(art.corollary->r0_norm) + "\n\n";
    md += "| k | lambda_k | max measured | bound | pass |\n";
    md += "|---|----------|--------------|-------|------|\n";
    for (const auto& r : art.corollary->per_k)
      md += "| " + std::to_string(r.k) + " | " + format_double(r.lambda_k) +
            " | " + format_double(r.max_measured) + " | " +
            format_double(r.max_bound) + " | " + (r.pass ? "yes" : "NO") +
            " |\n";
    md += "\n";
  }
  if (art.envelopes) {
    md += "## Parameter-norm envelopes\n\n";
    md += std::string("- xi / xi-tilde within their integral envelopes: ") +
          (art.envelopes->pass ? "yes" : "NO") + "\n\n";
  }
  return md;
}

}  // namespace detail

/// Writes the full artifact tree under out_dir. Every file goes through the
/// atomic writer; the manifest is written last and lists all other files.
inline void export_run(const RunArtifacts& art, const std::string& out_dir,
                       bool write_plots = true) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<std::string> files;
  const auto emit_text = [&](const std::string& rel, const std::string& text) {
    atomic_write_text((fs::path(out_dir) / rel).string(), text);
    files.push_back(rel);
  };

  const Trajectory& traj = art.traj;
  const auto nt = static_cast<Eigen::Index>(traj.times.size());
  Vec times(nt);
  for (Eigen::Index i = 0; i < nt; ++i) times(i) = traj.times[i];

  emit_text("times.csv", csv_of({"t"}, Mat(times)));

  {
    Mat r(nt, traj.n + 1);
    r.col(0) = times;
    r.rightCols(traj.n) = traj.residuals;
    std::vector<std::string> header = {"t"};
    for (int i = 0; i < traj.n; ++i) header.push_back("r" + std::to_string(i));
    emit_text("residuals.csv", csv_of(header, r));
  }
  if (traj.test_residuals.cols() > 0) {
    Mat r(nt, traj.test_residuals.cols() + 1);
    r.col(0) = times;
    r.rightCols(traj.test_residuals.cols()) = traj.test_residuals;
    std::vector<std::string> header = {"t"};
    for (Eigen::Index i = 0; i < traj.test_residuals.cols(); ++i)
      header.push_back("g" + std::to_string(i));
    emit_text("test_residuals.csv", csv_of(header, r));
  }
  {
    Mat x(nt, 3);
    x.col(0) = times;
    x.col(1) = traj.xi_series;
    x.col(2) = traj.xi_tilde_series;
    emit_text("xi.csv", csv_of({"t", "xi", "xi_tilde"}, x));
  }
  {
    Mat dcsv(art.data.X.rows(), 4);
    dcsv.col(0) = art.data_angles;
    dcsv.col(1) = art.data.X.col(0);
    dcsv.col(2) = art.data.X.col(1);
    dcsv.col(3) = art.data.y;
    emit_text("data.csv", csv_of({"angle", "x0", "x1", "y"}, dcsv));
  }

  {
    Mat snaps(static_cast<Eigen::Index>(traj.snap_times.size()), 2);
    std::vector<std::string> tags;
    for (std::size_t s = 0; s < traj.snap_times.size(); ++s) {
      snaps(static_cast<Eigen::Index>(s), 0) = static_cast<double>(s);
      snaps(static_cast<Eigen::Index>(s), 1) = traj.snap_times[s];
      tags.push_back(to_string(traj.gram_snapshots[s].tag));
    }
    std::string text = "index,t,tag\n";
    for (std::size_t s = 0; s < traj.snap_times.size(); ++s)
      text += std::to_string(s) + "," + format_double(traj.snap_times[s]) +
              "," + tags[s] + "\n";
    emit_text("snapshots.csv", text);
  }
  for (std::size_t s = 0; s < traj.gram_snapshots.size(); ++s) {
    char name[32];
    std::snprintf(name, sizeof(name), "gram_%04zu", s);
    std::vector<std::string> header;
    for (int i = 0; i < traj.n; ++i) header.push_back("c" + std::to_string(i));
    emit_text(std::string(name) + ".csv",
              csv_of(header, traj.gram_snapshots[s].H));
    const std::string rel = std::string(name) + ".bin";
    write_gram_binary((fs::path(out_dir) / rel).string(),
                      traj.gram_snapshots[s]);
    files.push_back(rel);
  }
  for (std::size_t s = 0; s < traj.theta_checkpoints.size(); ++s) {
    char name[48];
    std::snprintf(name, sizeof(name), "checkpoints/checkpoint_%04zu.bin", s);
    Checkpoint ck;
    ck.m = traj.m;
    ck.d = traj.d;
    ck.scheme = art.cfg.scheme;
    ck.seed = art.cfg.seed;
    ck.t = traj.snap_times[s];
    ck.theta = traj.theta_checkpoints[s];
    write_checkpoint((fs::path(out_dir) / name).string(), ck);
    files.push_back(name);
  }

  if (art.g_inf || !traj.gram_snapshots.empty()) {
    const GramPair& ref =
        art.g_inf ? *art.g_inf : traj.gram_snapshots.front();
    const EigenSystem sys = eig_gram(ref);
    std::string text = "index,lambda,sigma_model,mode_label\n";
    for (int i = 0; i < sys.n(); ++i) {
      double sigma = 0.0;
      std::string label = "none";
      if (art.model && i < art.model->size()) {
        sigma = art.model->sigma(i);
        label = art.model->modes[static_cast<std::size_t>(i)].label();
      }
      text += std::to_string(i) + "," + format_double(sys.lambdas(i)) + "," +
              format_double(sigma) + "," + label + "\n";
    }
    emit_text("spectrum.csv", text);
  }

  const bool any_checks = art.training_identity || art.function_identity ||
                          art.corollary || art.envelopes;
  if (any_checks) {
    emit_text("deviations.json", detail::deviations_json(art).dump(2) + "\n");
    emit_text("deviations.md", detail::deviations_markdown(art));
  }

  if (write_plots) {
    {
      SvgSeries train{"train", {}, {}};
      for (Eigen::Index i = 0; i < nt; ++i) {
        train.x.push_back(traj.times[i]);
        train.y.push_back(
            std::max(rn_norm(traj.residual_at(static_cast<int>(i))), 1e-300));
      }
      std::vector<SvgSeries> series = {train};
      if (traj.test_residuals.cols() > 0) {
        SvgSeries test{"held-out", {}, {}};
        for (Eigen::Index i = 0; i < nt; ++i) {
          test.x.push_back(traj.times[i]);
          test.y.push_back(std::max(
              rn_norm(traj.test_residuals.row(i).transpose()), 1e-300));
        }
        series.push_back(test);
      }
      emit_text("plots/residual_decay.svg",
                svg_line_plot("residual decay", "t", "||r||", series, true));
    }
    if (art.envelopes) {
      std::vector<SvgSeries> series = {
          {"xi", art.envelopes->times, art.envelopes->xi},
          {"xi envelope", art.envelopes->times, art.envelopes->xi_envelope},
          {"xi~", art.envelopes->times, art.envelopes->xi_tilde},
          {"xi~ envelope", art.envelopes->times,
           art.envelopes->xi_tilde_envelope}};
      emit_text("plots/xi_envelopes.svg",
                svg_line_plot("norm ratios vs envelopes", "t", "value", series));
    }
    if (art.model) {
      std::vector<SvgSeries> series;
      const std::vector<int> idx = top_modes_by_initial_coefficient(
          *art.model, traj.test_residuals.row(0).transpose(), art.grid_angles,
          3);
      for (int mi : idx) {
        const ModeInfo& mode = art.model->modes[static_cast<std::size_t>(mi)];
        SvgSeries s{mode.label(), {}, {}};
        for (Eigen::Index i = 0; i < nt; ++i) {
          const double a = circle_mode_inner(
              traj.test_residuals.row(i).transpose(), art.grid_angles, mode);
          s.x.push_back(traj.times[i]);
          s.y.push_back(std::max(std::fabs(a), 1e-300));
        }
        series.push_back(std::move(s));
      }
      emit_text("plots/mode_energies.svg",
                svg_line_plot("eigenmode coefficients of the residual", "t",
                              "|<r, phi>|", series, true));
    }
  }

  // Manifest last: it lists everything above.
  const Config resolved = resolved_config(art.cfg);
  nlohmann::json manifest;
  manifest["name"] = art.cfg.name;
  manifest["config"] = resolved.canonical();
  manifest["config_hash"] = detail::hash_hex(resolved.hash());
  manifest["seeds"] = {
      {"master", art.cfg.seed},
      {"data", derive_seed(art.cfg.seed, "data")},
      {"init", derive_seed(art.cfg.seed, "init")},
  };
  manifest["sizes"] = {{"n", traj.n},       {"m", traj.m},
                       {"d", traj.d},       {"p", art.net0.p()},
                       {"dense", nt},       {"snapshots", traj.snap_times.size()},
                       {"grid", art.grid_angles.size()}};
  manifest["metrics"] = art.metrics;
  manifest["format_versions"] = {{"gram", 1}, {"checkpoint", 1}};
  std::sort(files.begin(), files.end());
  manifest["files"] = files;
  atomic_write_text((fs::path(out_dir) / "manifest.json").string(),
                    manifest.dump(2) + "\n");
}

/// JSON rendering of a bound report (all values evaluated, with the symbolic
/// factors preserved in the formula strings).
inline nlohmann::json bound_report_json(const BoundReport& rep) {
  nlohmann::json j;
  j["constants"] = {{"sigma0", rep.constants.sigma0},
                    {"sup_d1", rep.constants.sup_d1},
                    {"sup_d2", rep.constants.sup_d2},
                    {"D", rep.constants.D},
                    {"Dprime", rep.constants.Dprime}};
  j["S_prime"] = rep.S_prime;
  j["S"] = rep.S;
  j["subgaussian_estimated"] = rep.subgaussian_estimated;
  if (rep.lipschitz_L) j["lipschitz_L"] = *rep.lipschitz_L;
  if (rep.gronwall_rate) j["gronwall_rate"] = *rep.gronwall_rate;
  if (rep.psi_poly) j["psi_poly"] = *rep.psi_poly;
  if (rep.t_stop) j["t_stop"] = *rep.t_stop;
  if (rep.T_stop) j["T_stop"] = *rep.T_stop;
  if (rep.noise_term) j["noise_term"] = *rep.noise_term;
  nlohmann::json reqs = nlohmann::json::array();
  for (const Requirement& r : rep.requirements)
    reqs.push_back({{"id", r.id},
                    {"quantity", r.quantity},
                    {"value", r.value},
                    {"exact", r.exact},
                    {"formula", r.formula},
                    {"notes", r.notes}});
  j["requirements"] = reqs;
  j["m_required"] = rep.m_required;
  j["n_required"] = rep.n_required;
  return j;
}

inline std::string bound_report_markdown(const BoundReport& rep) {
  std::string md = "# Hypothesis calculator\n\n";
  md += "Activation constants: D = " + format_double(rep.constants.D) +
        ", D' = " + format_double(rep.constants.Dprime) + ", sup|sigma'| = " +
        format_double(rep.constants.sup_d1) + ", sup|sigma''| = " +
        format_double(rep.constants.sup_d2) + "\n\n";
  md += "S' = " + format_double(rep.S_prime) + ", S = " + format_double(rep.S) +
        "\n\n";
  if (rep.lipschitz_L)
    md += "Kernel Lipschitz constant L = " + format_double(*rep.lipschitz_L) +
          "\n\n";
  md += "| guarantee | quantity | value | exact | formula |\n";
  md += "|-----------|----------|-------|-------|--------|\n";
  for (const Requirement& r : rep.requirements)
    md += "| " + r.id + " | " + r.quantity + " | " + format_double(r.value) +
          " | " + (r.exact ? "yes" : "poly part") + " | `" + r.formula +
          "` |\n";
  md += "\nNon-exact rows evaluate the polynomial dependence with unit "
        "constants; suppressed constants and log factors are noted per row.\n";
  return md;
}

/// Builds report.md / report.json inside a run directory from its manifest
/// and (if present) deviation results. Returns false when a proven
/// inequality was violated in the recorded results.
inline bool generate_report(const std::string& run_dir) {
  namespace fs = std::filesystem;
  const std::string manifest_text =
      read_text((fs::path(run_dir) / "manifest.json").string());
  const nlohmann::json manifest = nlohmann::json::parse(manifest_text);

  bool ok = true;
  nlohmann::json report;
  report["name"] = manifest.at("name");
  report["config_hash"] = manifest.at("config_hash");
  report["sizes"] = manifest.at("sizes");
  report["metrics"] = manifest.at("metrics");

  std::string md = "# Run report: " +
                   manifest.at("name").get<std::string>() + "\n\n";
  md += "Config hash: `" + manifest.at("config_hash").get<std::string>() +
        "`\n\n";
  const auto& sizes = manifest.at("sizes");
  md += "n = " + sizes.at("n").dump() + ", m = " + sizes.at("m").dump() +
        ", d = " + sizes.at("d").dump() + ", p = " + sizes.at("p").dump() +
        "\n\n## Metrics\n\n| metric | value |\n|--------|-------|\n";
  for (const auto& [key, value] : manifest.at("metrics").items())
    md += "| " + key + " | " + value.dump() + " |\n";

  const fs::path dev_path = fs::path(run_dir) / "deviations.json";
  if (fs::exists(dev_path)) {
    const nlohmann::json dev = nlohmann::json::parse(read_text(dev_path.string()));
    report["deviations"] = dev;
    if (dev.contains("projected_bound") &&
        !dev.at("projected_bound").at("all_pass").get<bool>())
      ok = false;
    if (dev.contains("norm_envelopes") &&
        !dev.at("norm_envelopes").at("pass").get<bool>())
      ok = false;
    md += "\n## Proven-inequality checks\n\n";
    if (dev.contains("projected_bound"))
      md += std::string("- projected-residual bound: ") +
            (dev.at("projected_bound").at("all_pass").get<bool>() ? "pass"
                                                                  : "FAIL") +
            "\n";
    if (dev.contains("norm_envelopes"))
      md += std::string("- norm envelopes: ") +
            (dev.at("norm_envelopes").at("pass").get<bool>() ? "pass" : "FAIL") +
            "\n";
    if (dev.contains("training_identity"))
      md += "- training identity max relative residual: " +
            dev.at("training_identity").at("relative_residual").dump() + "\n";
    if (dev.contains("function_identity")) {
      double worst = 0.0;
      for (const auto& mode : dev.at("function_identity").at("modes"))
        worst = std::max(worst, mode.at("relative_residual").get<double>());
      md += "- function identity worst relative residual: " +
            format_double(worst) + "\n";
    }
  }
  report["pass"] = ok;
  md += std::string("\nOverall: ") + (ok ? "pass" : "FAIL") + "\n";

  atomic_write_text((fs::path(run_dir) / "report.json").string(),
                    report.dump(2) + "\n");
  atomic_write_text((fs::path(run_dir) / "report.md").string(), md);
  return ok;
}

}  // namespace ntklab
