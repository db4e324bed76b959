// Command-line front end: run single experiments, sweep a config key,
// re-verify the pinned acceptance recipes, rebuild reports from run
// directories, and evaluate the hypothesis calculator.
//
// Exit codes: 0 success, 1 a proven check or verification failed, 2 usage,
// config, or runtime error.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "ntklab/experiment.hpp"
#include "ntklab/recipes.hpp"

namespace {

ntklab::BoundInputs bound_inputs_from(const ntklab::Config& cfg) {
  ntklab::BoundInputs in;
  in.act = ntklab::activation_from_string(
      cfg.get_string("bounds.activation", "softplus"));
  in.scheme = ntklab::init_scheme_from_string(
      cfg.get_string("bounds.scheme", "doubling"));
  in.m = static_cast<int>(cfg.get_int("bounds.m", 0));
  in.n = static_cast<int>(cfg.get_int("bounds.n", 0));
  in.d = static_cast<int>(cfg.get_int("bounds.d", 0));
  in.k = static_cast<int>(cfg.get_int("bounds.k", 0));
  in.T = cfg.get_double("bounds.T", in.T);
  in.M = cfg.get_double("bounds.M", in.M);
  in.delta = cfg.get_double("bounds.delta", in.delta);
  in.epsilon = cfg.get_double("bounds.epsilon", in.epsilon);
  in.Gamma = cfg.get_double("bounds.Gamma", in.Gamma);
  in.subgaussian_K = cfg.get_double("bounds.subgaussian_K", in.subgaussian_K);
  in.subgaussian_estimated =
      cfg.get_bool("bounds.subgaussian_estimated", in.subgaussian_estimated);
  const auto opt = [&cfg](const char* key, double& slot) {
    if (cfg.has(key)) slot = cfg.get_double(key);
  };
  opt("bounds.y_norm", in.y_norm);
  opt("bounds.rhat0_norm", in.rhat0_norm);
  opt("bounds.fstar_sup", in.fstar_sup);
  opt("bounds.fstar_l2", in.fstar_l2);
  opt("bounds.f0_sup", in.f0_sup);
  opt("bounds.sigma_k", in.sigma_k);
  opt("bounds.sigma_k1", in.sigma_k1);
  opt("bounds.lambda_k", in.lambda_k);
  opt("bounds.lambda_n_unnorm", in.lambda_n_unnorm);
  opt("bounds.kappa", in.kappa);
  opt("bounds.Pk_fstar_l2", in.Pk_fstar_l2);
  opt("bounds.A", in.A);
  opt("bounds.B", in.B);
  opt("bounds.xi0", in.xi0);
  opt("bounds.xi_tilde0", in.xi_tilde0);
  return in;
}

void print_metrics(const std::map<std::string, double>& metrics) {
  for (const auto& [key, value] : metrics)
    std::cout << "  " << key << " = " << ntklab::format_double(value) << "\n";
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            bool has_seed, std::uint64_t seed, bool no_plots) {
  ntklab::Config raw = ntklab::Config::from_file(config_path);
  if (has_seed) raw.set("run.seed", std::to_string(seed));
  const ntklab::ExperimentConfig cfg = ntklab::experiment_config_from(raw);
  const ntklab::RunArtifacts art = ntklab::run_experiment(cfg);
  ntklab::export_run(art, out_dir, !no_plots);
  std::cout << "run '" << cfg.name << "' -> " << out_dir << "\n";
  print_metrics(art.metrics);
  if (!art.verifications_pass()) {
    std::cout << "verification FAILED\n";
    return 1;
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir,
              int jobs, bool has_seed, std::uint64_t seed) {
  ntklab::Config raw = ntklab::Config::from_file(config_path);
  if (has_seed) raw.set("run.seed", std::to_string(seed));
  const std::string key = raw.get_string("sweep.key");
  const std::string values_raw = raw.get_string("sweep.values");
  if (values_raw.size() < 2 || values_raw.front() != '[' ||
      values_raw.back() != ']')
    throw ntklab::ConfigError("sweep.values", "expected a bracketed list");
  const std::vector<std::string> values = ntklab::detail::split_list(
      values_raw.substr(1, values_raw.size() - 2), "sweep.values");
  if (values.empty())
    throw ntklab::ConfigError("sweep.values", "empty sweep");

  struct Slot {
    std::string value;
    std::string dir;
    std::map<std::string, double> metrics;
    bool pass = false;
    std::exception_ptr error;
  };
  std::vector<Slot> slots(values.size());

  const auto work = [&](std::size_t i) {
    try {
      ntklab::Config sub = raw;
      sub.set(key, values[i]);
      ntklab::ExperimentConfig cfg = ntklab::experiment_config_from(sub);
      cfg.name += "-" + values[i];
      const ntklab::RunArtifacts art = ntklab::run_experiment(cfg);
      const std::string dir = out_dir + "/" + cfg.name;
      ntklab::export_run(art, dir);
      slots[i] = {values[i], dir, art.metrics, art.verifications_pass(), nullptr};
    } catch (...) {
      slots[i].error = std::current_exception();
    }
  };

  const int n_jobs = std::max(1, jobs);
  for (std::size_t start = 0; start < values.size();
       start += static_cast<std::size_t>(n_jobs)) {
    std::vector<std::thread> pool;
    for (std::size_t i = start;
         i < std::min(values.size(), start + static_cast<std::size_t>(n_jobs));
         ++i)
      pool.emplace_back(work, i);
    for (auto& th : pool) th.join();
  }
  for (const Slot& s : slots)
    if (s.error) std::rethrow_exception(s.error);

  // Summary CSV over the union of metric names.
  std::vector<std::string> metric_names;
  for (const Slot& s : slots)
    for (const auto& [name, value] : s.metrics) {
      (void)value;
      if (std::find(metric_names.begin(), metric_names.end(), name) ==
          metric_names.end())
        metric_names.push_back(name);
    }
  std::sort(metric_names.begin(), metric_names.end());
  std::string csv = key;
  for (const std::string& name : metric_names) csv += "," + name;
  csv += "\n";
  for (const Slot& s : slots) {
    csv += s.value;
    for (const std::string& name : metric_names) {
      const auto it = s.metrics.find(name);
      csv += ",";
      csv += (it == s.metrics.end()) ? "" : ntklab::format_double(it->second);
    }
    csv += "\n";
  }
  ntklab::atomic_write_text(out_dir + "/sweep_summary.csv", csv);

  nlohmann::json manifest;
  manifest["key"] = key;
  manifest["values"] = values;
  std::vector<std::string> dirs;
  for (const Slot& s : slots) dirs.push_back(s.dir);
  manifest["runs"] = dirs;
  ntklab::atomic_write_text(out_dir + "/sweep_manifest.json",
                            manifest.dump(2) + "\n");

  bool all_pass = true;
  for (const Slot& s : slots) {
    std::cout << key << " = " << s.value << " -> " << s.dir
              << (s.pass ? "" : "  [verification FAILED]") << "\n";
    all_pass = all_pass && s.pass;
  }
  std::cout << "sweep summary -> " << out_dir << "/sweep_summary.csv\n";
  return all_pass ? 0 : 1;
}

int cmd_verify(const std::string& recipe) {
  std::vector<int> ids;
  if (recipe == "all") {
    for (int i = 1; i <= 13; ++i) ids.push_back(i);
  } else {
    ids.push_back(std::stoi(recipe));
  }
  ntklab::AcceptanceContext ctx;
  int failures = 0;
  for (const int id : ids) {
    const ntklab::CriterionResult r = ntklab::run_criterion(id, ctx);
    std::printf("criterion %02d [%s] %s (%.1fs)\n", r.id,
                r.pass ? "PASS" : "FAIL", r.name.c_str(), r.seconds);
    for (const std::string& line : r.details)
      std::printf("    %s\n", line.c_str());
    if (!r.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}

int cmd_bounds(const std::string& config_path, const std::string& out_dir) {
  const ntklab::Config raw = ntklab::Config::from_file(config_path);
  const ntklab::BoundInputs in = bound_inputs_from(raw);
  std::vector<std::string> targets;
  if (raw.has("bounds.targets")) {
    const std::string t = raw.get_string("bounds.targets");
    if (t.size() < 2 || t.front() != '[' || t.back() != ']')
      throw ntklab::ConfigError("bounds.targets", "expected a bracketed list");
    targets = ntklab::detail::split_list(t.substr(1, t.size() - 2),
                                         "bounds.targets");
  }
  const ntklab::BoundReport rep = ntklab::bound_report(in, targets);
  const std::string md = ntklab::bound_report_markdown(rep);
  std::cout << md;
  if (!out_dir.empty()) {
    ntklab::atomic_write_text(out_dir + "/bounds.md", md);
    ntklab::atomic_write_text(
        out_dir + "/bounds.json",
        ntklab::bound_report_json(rep).dump(2) + "\n");
    std::cout << "wrote " << out_dir << "/bounds.{md,json}\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shallow-network gradient-flow and tangent-kernel laboratory"};
  app.require_subcommand(0, 1);

  std::string config_path, out_dir = "out", run_dir, recipe = "all";
  std::uint64_t seed = 0;
  int jobs = 1;
  bool no_plots = false;

  auto* run_cmd = app.add_subcommand("run", "run one experiment from a config");
  run_cmd->add_option("--config", config_path, "config file")->required();
  run_cmd->add_option("--out", out_dir, "output directory");
  auto* seed_opt_run =
      run_cmd->add_option("--seed-override", seed, "replace run.seed");
  run_cmd->add_flag("--no-plots", no_plots, "skip SVG plots");

  auto* sweep_cmd =
      app.add_subcommand("sweep", "run a config once per value of one key");
  sweep_cmd->add_option("--config", config_path, "config file with a [sweep] "
                        "section (key, values)")->required();
  sweep_cmd->add_option("--out", out_dir, "output directory");
  sweep_cmd->add_option("--jobs", jobs, "parallel runs");
  auto* seed_opt_sweep =
      sweep_cmd->add_option("--seed-override", seed, "replace run.seed");

  auto* report_cmd =
      app.add_subcommand("report", "rebuild report.md/json from a run dir");
  report_cmd->add_option("--run", run_dir, "run directory")->required();

  auto* verify_cmd = app.add_subcommand(
      "verify", "re-run the pinned acceptance recipes (1..13 or all)");
  verify_cmd->add_option("--recipe", recipe, "criterion id or 'all'");

  auto* bounds_cmd = app.add_subcommand(
      "bounds", "evaluate the hypothesis calculator from a [bounds] section");
  bounds_cmd->add_option("--config", config_path, "config file")->required();
  bounds_cmd->add_option("--out", out_dir, "output directory (optional)");

  if (argc <= 1) {
    std::cout << app.help();
    return 2;
  }
  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed())
      return cmd_run(config_path, out_dir, seed_opt_run->count() > 0, seed,
                     no_plots);
    if (sweep_cmd->parsed())
      return cmd_sweep(config_path, out_dir, jobs,
                       seed_opt_sweep->count() > 0, seed);
    if (report_cmd->parsed()) {
      const bool ok = ntklab::generate_report(run_dir);
      std::cout << "report -> " << run_dir << "/report.md"
                << (ok ? "" : "  [recorded checks FAILED]") << "\n";
      return ok ? 0 : 1;
    }
    if (verify_cmd->parsed()) return cmd_verify(recipe);
    if (bounds_cmd->parsed())
      return cmd_bounds(config_path, bounds_cmd->count("--out") ? out_dir : "");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cout << app.help();
  return 2;
}
