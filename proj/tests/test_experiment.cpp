#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "ntklab/experiment.hpp"

using namespace ntklab;
namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;

namespace {

// Small but fully featured configuration: every verification enabled, the
// closed-form kernel as the infinite-width reference, and all snapshot
// artifacts recorded. Cheap enough to run twice for determinism checks.
ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.name = "desk";
  cfg.seed = 24;
  cfg.m = 8;
  cfg.d = 2;
  cfg.act = Activation::erf;
  cfg.family = InitFamily::gaussian;
  cfg.scheme = InitScheme::doubling;
  cfg.n = 6;
  cfg.sampling = CircleSampling::equispaced;
  cfg.target_modes = {1};
  cfg.target_coeffs = {1.0};
  cfg.T = 0.5;
  cfg.dense_count = 17;
  cfg.snapshots.count = 4;
  cfg.grid_count = 16;
  cfg.record_cross = true;
  cfg.drift_grid_count = 6;
  cfg.max_freq = 3;
  cfg.use_closed_form = true;
  cfg.verify_training_identity = true;
  cfg.verify_function_identity = true;
  cfg.verify_corollary = true;
  cfg.verify_envelopes = true;
  return cfg;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

std::set<std::string> files_under(const fs::path& root) {
  std::set<std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file())
      out.insert(fs::relative(entry.path(), root).generic_string());
  return out;
}

fs::path fresh_dir(const std::string& leaf) {
  const fs::path dir = fs::temp_directory_path() / "ntklab_test_runs" / leaf;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("run_experiment produces a consistent verified bundle",
          "[experiment]") {
  const ExperimentConfig cfg = small_config();
  const RunArtifacts art = run_experiment(cfg);

  REQUIRE(art.traj.residuals.rows() == cfg.dense_count);
  REQUIRE(art.traj.residuals.cols() == cfg.n);
  REQUIRE(art.traj.test_residuals.cols() == cfg.grid_count);
  REQUIRE(art.traj.gram_snapshots.size() == 5);
  REQUIRE(art.traj.cross_snapshots.size() == 5);
  REQUIRE(art.traj.drift_snapshots.size() == 5);

  // The closed-form route fills g_inf directly and never runs Monte Carlo.
  REQUIRE(art.g_inf.has_value());
  REQUIRE_FALSE(art.g_inf_mc.has_value());
  REQUIRE(art.model.has_value());

  const auto& metrics = art.metrics;
  for (const char* key :
       {"r0_norm", "final_residual", "xi_final", "xi_tilde_final",
        "sup_drift", "identity_max_residual", "identity_rel_residual",
        "sup_op_deviation", "mode_rel_residual_max", "corollary_pass",
        "corollary_worst_margin", "envelope_pass"})
    REQUIRE(metrics.count(key) == 1);

  const double r0 = metrics.at("r0_norm");
  CHECK(r0 == Catch::Approx(rn_norm(art.traj.residuals.row(0))).epsilon(1e-14));
  CHECK(metrics.at("final_residual") < r0);
  CHECK(metrics.at("xi_final") >= 1.0);
  CHECK(metrics.at("sup_drift") >= 0.0);

  // Both reconstruction identities hold to quadrature accuracy at this
  // resolution, and all enabled pass/fail verifications come back green.
  CHECK(metrics.at("identity_rel_residual") < 5e-2);
  CHECK(metrics.at("mode_rel_residual_max") < 5e-2);
  REQUIRE(art.training_identity.has_value());
  REQUIRE(art.function_identity.has_value());
  REQUIRE(art.corollary.has_value());
  REQUIRE(art.envelopes.has_value());
  CHECK(art.corollary->all_pass);
  CHECK(art.envelopes->pass);
  CHECK(metrics.at("corollary_pass") == 1.0);
  CHECK(metrics.at("envelope_pass") == 1.0);
  CHECK(art.verifications_pass());

  // Default mode list: one check per k in 1..min(10, n).
  CHECK(art.corollary->per_k.size() == 6);
}

TEST_CASE("run_experiment is deterministic in memory", "[experiment]") {
  const ExperimentConfig cfg = small_config();
  const RunArtifacts a = run_experiment(cfg);
  const RunArtifacts b = run_experiment(cfg);
  REQUIRE(a.traj.residuals == b.traj.residuals);
  REQUIRE(a.net0.theta == b.net0.theta);
  REQUIRE(a.metrics == b.metrics);
}

TEST_CASE("export_run writes a complete, self-describing directory",
          "[experiment]") {
  const ExperimentConfig cfg = small_config();
  const RunArtifacts art = run_experiment(cfg);
  const fs::path dir = fresh_dir("export");
  export_run(art, dir.string());

  const nlohmann::json manifest =
      nlohmann::json::parse(read_file(dir / "manifest.json"));
  CHECK(manifest.at("name") == cfg.name);
  CHECK(manifest.at("sizes").at("n") == cfg.n);
  CHECK(manifest.at("sizes").at("m") == cfg.m);
  CHECK(manifest.at("sizes").at("d") == cfg.d);
  CHECK(manifest.at("sizes").at("p") == cfg.m * cfg.d + 2 * cfg.m + 1);
  CHECK(manifest.at("format_versions").at("gram") == 1);

  const Config resolved = resolved_config(cfg);
  CHECK(manifest.at("config") == resolved.canonical());
  CHECK(manifest.at("config_hash") == detail::hash_hex(resolved.hash()));

  // The manifest's file list and the directory contents agree exactly.
  std::set<std::string> listed;
  for (const auto& f : manifest.at("files"))
    listed.insert(f.get<std::string>());
  std::set<std::string> on_disk = files_under(dir);
  REQUIRE(on_disk.count("manifest.json") == 1);
  on_disk.erase("manifest.json");
  CHECK(listed == on_disk);

  const CsvTable times = read_csv_table((dir / "times.csv").string());
  CHECK(times.rows.size() == static_cast<std::size_t>(cfg.dense_count));
  const CsvTable spectrum = read_csv_table((dir / "spectrum.csv").string());
  CHECK(spectrum.rows.size() >= 1);
  CHECK(fs::exists(dir / "deviations.json"));
  CHECK(fs::exists(dir / "checkpoints" / "checkpoint_0000.bin"));
  CHECK(fs::exists(dir / "plots" / "residual_decay.svg"));

  // Re-exporting the same artifacts yields byte-identical files.
  const fs::path dir2 = fresh_dir("export_again");
  export_run(art, dir2.string());
  for (const std::string& rel :
       {std::string("manifest.json"), std::string("gram_0000.bin"),
        std::string("residuals.csv"), std::string("plots/residual_decay.svg"),
        std::string("deviations.json")})
    CHECK(read_file(dir / rel) == read_file(dir2 / rel));
}

TEST_CASE("generate_report summarizes a run and flags violations",
          "[experiment]") {
  const ExperimentConfig cfg = small_config();
  const RunArtifacts art = run_experiment(cfg);
  const fs::path dir = fresh_dir("report");
  export_run(art, dir.string(), /*write_plots=*/false);

  REQUIRE(generate_report(dir.string()));
  const std::string md = read_file(dir / "report.md");
  CHECK_THAT(md, ContainsSubstring("Overall: pass"));
  CHECK_THAT(md, ContainsSubstring("projected-residual bound: pass"));
  const nlohmann::json report =
      nlohmann::json::parse(read_file(dir / "report.json"));
  CHECK(report.at("pass") == true);
  CHECK(report.at("config_hash") == detail::hash_hex(resolved_config(cfg).hash()));

  // A recorded bound violation turns the report red.
  const fs::path bad = fresh_dir("report_bad");
  fs::create_directories(bad);
  nlohmann::json manifest;
  manifest["name"] = "bad";
  manifest["config_hash"] = "0";
  manifest["sizes"] = {{"n", 1}, {"m", 2}, {"d", 2}, {"p", 9}};
  manifest["metrics"] = {{"r0_norm", 1.0}};
  atomic_write_text((bad / "manifest.json").string(), manifest.dump(2) + "\n");
  nlohmann::json dev;
  dev["projected_bound"] = {{"all_pass", false}};
  atomic_write_text((bad / "deviations.json").string(), dev.dump(2) + "\n");
  REQUIRE_FALSE(generate_report(bad.string()));
  CHECK_THAT(read_file(bad / "report.md"), ContainsSubstring("FAIL"));
}

TEST_CASE("spectrum model requires gaussian init on the Monte-Carlo route",
          "[experiment]") {
  ExperimentConfig cfg = small_config();
  cfg.use_closed_form = false;
  cfg.family = InitFamily::rademacher;
  REQUIRE_THROWS_WITH(build_circle_model(cfg), ContainsSubstring("gaussian"));
}

TEST_CASE("Monte-Carlo spectrum model matches the closed form",
          "[experiment][slow]") {
  ExperimentConfig cfg = small_config();
  cfg.max_freq = 6;
  const SpectrumModel closed = build_circle_model(cfg);

  cfg.use_closed_form = false;
  cfg.m = 64;
  cfg.mc_seeds = 192;
  const SpectrumModel mc = build_circle_model(cfg);

  CHECK(std::abs(mc.kappa - closed.kappa) < 0.15);
  CHECK(std::abs(mc.sigma_of_freq(0) - closed.sigma_of_freq(0)) < 0.1);
  CHECK(std::abs(mc.sigma_of_freq(1) - closed.sigma_of_freq(1)) < 0.05);
}
