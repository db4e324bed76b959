#pragma once

/// @file config.hpp
/// Flat sectioned key-value configs with a canonical serialization whose
/// FNV-1a hash is stable under key/section reordering and whitespace, plus
/// the typed experiment schema.

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ntklab/activation.hpp"
#include "ntklab/common.hpp"
#include "ntklab/dataset.hpp"
#include "ntklab/flow.hpp"
#include "ntklab/network.hpp"
#include "ntklab/ode.hpp"
#include "ntklab/rng.hpp"

namespace ntklab {

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

/// Splits a bracketed list body on top-level commas (no nesting needed).
inline std::vector<std::string> split_list(const std::string& body,
                                           const std::string& key) {
  std::vector<std::string> items;
  std::string cur;
  bool in_quote = false;
  for (char ch : body) {
    if (ch == '"') in_quote = !in_quote;
    if (ch == ',' && !in_quote) {
      items.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  const std::string last = trim(cur);
  if (!last.empty()) items.push_back(last);
  for (const std::string& it : items)
    if (it.empty()) throw ConfigError(key, "empty element in list");
  return items;
}

}  // namespace detail

/// Parsed config: a sorted map from "section.key" to a raw value token.
class Config {
 public:
  Config() = default;

  /// Parses `[section]` headers, `key = value` lines, and `#` comments.
  /// Values are bare tokens, quoted strings, or bracketed lists.
  static Config parse(const std::string& text) {
    Config cfg;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      // Strip comments outside quotes.
      std::string line;
      bool in_quote = false;
      for (char ch : raw) {
        if (ch == '"') in_quote = !in_quote;
        if (ch == '#' && !in_quote) break;
        line += ch;
      }
      line = detail::trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError("line " + std::to_string(line_no),
                            "unterminated section header: " + raw);
        section = detail::trim(line.substr(1, line.size() - 2));
        if (section.empty())
          throw ConfigError("line " + std::to_string(line_no), "empty section name");
        continue;
      }
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(line_no),
                          "expected 'key = value', got: " + raw);
      std::string key = detail::trim(line.substr(0, eq));
      const std::string value = detail::trim(line.substr(eq + 1));
      if (key.empty())
        throw ConfigError("line " + std::to_string(line_no), "empty key");
      if (!section.empty()) key = section + "." + key;
      if (cfg.values_.count(key)) throw ConfigError(key, "duplicate key");
      if (value.empty()) throw ConfigError(key, "empty value");
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static Config from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  void set(const std::string& key, const std::string& value) {
    values_[key] = value;
  }

  const std::map<std::string, std::string>& entries() const { return values_; }

  std::string get_string(const std::string& key) const {
    const std::string& raw = raw_of(key);
    if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') {
      std::string out;
      for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
        if (raw[i] == '\\' && i + 2 < raw.size()) {
          ++i;
          out += (raw[i] == 'n') ? '\n' : raw[i];
        } else {
          out += raw[i];
        }
      }
      return out;
    }
    return raw;
  }

  std::string get_string(const std::string& key, const std::string& dflt) const {
    return has(key) ? get_string(key) : dflt;
  }

  long long get_int(const std::string& key) const {
    return parse_int(raw_of(key), key);
  }
  long long get_int(const std::string& key, long long dflt) const {
    return has(key) ? get_int(key) : dflt;
  }

  std::uint64_t get_uint(const std::string& key) const {
    const std::string& raw = raw_of(key);
    std::uint64_t v = 0;
    const auto res = std::from_chars(raw.data(), raw.data() + raw.size(), v);
    if (res.ec != std::errc() || res.ptr != raw.data() + raw.size())
      throw ConfigError(key, "expected an unsigned integer, got '" + raw + "'");
    return v;
  }
  std::uint64_t get_uint(const std::string& key, std::uint64_t dflt) const {
    return has(key) ? get_uint(key) : dflt;
  }

  double get_double(const std::string& key) const {
    return parse_double(raw_of(key), key);
  }
  double get_double(const std::string& key, double dflt) const {
    return has(key) ? get_double(key) : dflt;
  }

  bool get_bool(const std::string& key) const {
    const std::string& raw = raw_of(key);
    if (raw == "true" || raw == "on" || raw == "1") return true;
    if (raw == "false" || raw == "off" || raw == "0") return false;
    throw ConfigError(key, "expected a boolean, got '" + raw + "'");
  }
  bool get_bool(const std::string& key, bool dflt) const {
    return has(key) ? get_bool(key) : dflt;
  }

  std::vector<long long> get_int_list(const std::string& key) const {
    std::vector<long long> out;
    for (const std::string& tok : list_tokens(key)) out.push_back(parse_int(tok, key));
    return out;
  }

  std::vector<double> get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const std::string& tok : list_tokens(key))
      out.push_back(parse_double(tok, key));
    return out;
  }

  /// Canonical text: one `key = value` line per entry, sorted by full key,
  /// list values re-joined with ", ". Reordering sections or keys in the
  /// source yields byte-identical canonical text.
  std::string canonical() const {
    std::string out;
    for (const auto& [key, raw] : values_) {
      std::string value = raw;
      if (!raw.empty() && raw.front() == '[') {
        const auto toks = detail::split_list(raw.substr(1, raw.size() - 2), key);
        value = "[";
        for (std::size_t i = 0; i < toks.size(); ++i) {
          if (i) value += ", ";
          value += toks[i];
        }
        value += "]";
      }
      out += key + " = " + value + "\n";
    }
    return out;
  }

  std::uint64_t hash() const { return fnv1a64(canonical()); }

 private:
  const std::string& raw_of(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(key, "missing required key");
    return it->second;
  }

  std::vector<std::string> list_tokens(const std::string& key) const {
    const std::string& raw = raw_of(key);
    if (raw.size() < 2 || raw.front() != '[' || raw.back() != ']')
      throw ConfigError(key, "expected a bracketed list, got '" + raw + "'");
    return detail::split_list(raw.substr(1, raw.size() - 2), key);
  }

  static long long parse_int(const std::string& tok, const std::string& key) {
    long long v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
      throw ConfigError(key, "expected an integer, got '" + tok + "'");
    return v;
  }

  static double parse_double(const std::string& tok, const std::string& key) {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
      throw ConfigError(key, "expected a number, got '" + tok + "'");
    return v;
  }

  std::map<std::string, std::string> values_;
};

/// Fully resolved experiment description (defaults applied, values checked).
struct ExperimentConfig {
  std::string name = "run";
  std::uint64_t seed = 0;

  // network
  int m = 64;
  int d = 2;
  Activation act = Activation::tanh;
  InitFamily family = InitFamily::gaussian;
  InitScheme scheme = InitScheme::doubling;

  // data
  int n = 32;
  CircleSampling sampling = CircleSampling::iid;
  std::vector<int> target_modes = {1};
  std::vector<double> target_coeffs = {1.0};

  // flow
  double T = 1.0;
  int dense_count = 129;
  SnapshotSchedule snapshots;  // dense_stride, 16
  OdeOptions ode;

  // eval
  int grid_count = 256;
  bool record_cross = false;
  int drift_grid_count = 0;  ///< 0 disables drift snapshots

  // kernel
  int mc_seeds = 1024;
  int max_freq = 10;
  bool use_closed_form = false;  ///< erf-only analytic kernel

  // verify toggles
  bool verify_training_identity = false;
  bool verify_function_identity = false;
  bool verify_corollary = false;
  bool verify_envelopes = true;
  std::vector<int> corollary_k = {};
  int top_mode_count = 3;

  BandlimitedTarget target() const {
    BandlimitedTarget t{target_modes, target_coeffs};
    t.validate();
    return t;
  }
};

inline ExperimentConfig experiment_config_from(const Config& cfg) {
  ExperimentConfig e;
  e.name = cfg.get_string("run.name", e.name);
  e.seed = cfg.get_uint("run.seed", 0);

  e.m = static_cast<int>(cfg.get_int("network.m", e.m));
  e.d = static_cast<int>(cfg.get_int("network.d", e.d));
  e.act = activation_from_string(cfg.get_string("network.activation", "tanh"));
  e.family = init_family_from_string(cfg.get_string("network.family", "gaussian"));
  e.scheme = init_scheme_from_string(cfg.get_string("network.scheme", "doubling"));
  if (e.m < 1) throw ConfigError("network.m", "width must be at least 1");
  if (e.scheme == InitScheme::doubling && e.m % 2 != 0)
    throw ConfigError("network.m",
                      "doubling scheme requires an even width (got " +
                          std::to_string(e.m) + ")");
  if (e.d < 1) throw ConfigError("network.d", "input dimension must be at least 1");

  e.n = static_cast<int>(cfg.get_int("data.n", e.n));
  if (e.n < 1) throw ConfigError("data.n", "sample count must be at least 1");
  const std::string samp = cfg.get_string("data.sampling", "iid");
  if (samp == "iid")
    e.sampling = CircleSampling::iid;
  else if (samp == "equispaced")
    e.sampling = CircleSampling::equispaced;
  else
    throw ConfigError("data.sampling", "expected iid or equispaced, got '" + samp + "'");
  if (cfg.has("data.modes")) {
    e.target_modes.clear();
    for (long long v : cfg.get_int_list("data.modes"))
      e.target_modes.push_back(static_cast<int>(v));
  }
  if (cfg.has("data.coeffs")) e.target_coeffs = cfg.get_double_list("data.coeffs");
  if (e.target_modes.size() != e.target_coeffs.size())
    throw ConfigError("data.coeffs", "modes and coeffs must have equal length");
  if (e.d != 2)
    throw ConfigError("network.d", "circle data requires input dimension 2");

  e.T = cfg.get_double("flow.T", e.T);
  if (!(e.T > 0.0)) throw ConfigError("flow.T", "horizon must be positive");
  e.dense_count = static_cast<int>(cfg.get_int("flow.dense_count", e.dense_count));
  if (e.dense_count < 2)
    throw ConfigError("flow.dense_count", "need at least 2 dense times");
  const std::string sched = cfg.get_string("flow.snapshot_kind", "dense_stride");
  if (sched == "dense_stride")
    e.snapshots.kind = SnapshotSchedule::Kind::dense_stride;
  else if (sched == "geometric")
    e.snapshots.kind = SnapshotSchedule::Kind::geometric;
  else
    throw ConfigError("flow.snapshot_kind",
                      "expected dense_stride or geometric, got '" + sched + "'");
  e.snapshots.count =
      static_cast<int>(cfg.get_int("flow.snapshot_count", e.snapshots.count));
  const std::string method = cfg.get_string("flow.method", "dopri45");
  if (method == "dopri45")
    e.ode.method = OdeMethod::dopri45;
  else if (method == "rk4")
    e.ode.method = OdeMethod::rk4_fixed;
  else
    throw ConfigError("flow.method", "expected dopri45 or rk4, got '" + method + "'");
  e.ode.rel_tol = cfg.get_double("flow.rel_tol", e.ode.rel_tol);
  e.ode.abs_tol = cfg.get_double("flow.abs_tol", e.ode.abs_tol);
  e.ode.rk4_step = cfg.get_double("flow.rk4_step", e.ode.rk4_step);
  if (!(e.ode.rel_tol > 0.0)) throw ConfigError("flow.rel_tol", "must be positive");

  e.grid_count = static_cast<int>(cfg.get_int("eval.grid_count", e.grid_count));
  if (e.grid_count < 1) throw ConfigError("eval.grid_count", "must be at least 1");
  e.record_cross = cfg.get_bool("eval.record_cross", e.record_cross);
  e.drift_grid_count =
      static_cast<int>(cfg.get_int("eval.drift_grid_count", e.drift_grid_count));

  e.mc_seeds = static_cast<int>(cfg.get_int("kernel.mc_seeds", e.mc_seeds));
  e.max_freq = static_cast<int>(cfg.get_int("kernel.max_freq", e.max_freq));
  e.use_closed_form = cfg.get_bool("kernel.closed_form", e.use_closed_form);
  if (e.use_closed_form && e.act != Activation::erf)
    throw ConfigError("kernel.closed_form",
                      "the analytic kernel is available for erf only");

  e.verify_training_identity =
      cfg.get_bool("verify.training_identity", e.verify_training_identity);
  e.verify_function_identity =
      cfg.get_bool("verify.function_identity", e.verify_function_identity);
  e.verify_corollary = cfg.get_bool("verify.corollary", e.verify_corollary);
  e.verify_envelopes = cfg.get_bool("verify.envelopes", e.verify_envelopes);
  if (cfg.has("verify.corollary_k")) {
    e.corollary_k.clear();
    for (long long v : cfg.get_int_list("verify.corollary_k"))
      e.corollary_k.push_back(static_cast<int>(v));
  }
  e.top_mode_count =
      static_cast<int>(cfg.get_int("verify.top_modes", e.top_mode_count));

  if (e.verify_function_identity && !e.record_cross)
    throw ConfigError("eval.record_cross",
                      "the function-space identity needs cross-kernel snapshots");
  if ((e.verify_training_identity || e.verify_function_identity) &&
      e.dense_count % 2 == 0)
    throw ConfigError("flow.dense_count",
                      "identity verification needs an odd dense count "
                      "(even interval count) for Simpson quadrature");
  return e;
}

/// Re-serializes the resolved experiment (defaults included) so manifests
/// record exactly what ran; hash of this config identifies the run.
inline Config resolved_config(const ExperimentConfig& e) {
  Config c;
  c.set("run.name", e.name);
  c.set("run.seed", std::to_string(e.seed));
  c.set("network.m", std::to_string(e.m));
  c.set("network.d", std::to_string(e.d));
  c.set("network.activation", to_string(e.act));
  c.set("network.family", to_string(e.family));
  c.set("network.scheme", to_string(e.scheme));
  c.set("data.n", std::to_string(e.n));
  c.set("data.sampling",
        e.sampling == CircleSampling::iid ? "iid" : "equispaced");
  std::string modes = "[", coeffs = "[";
  for (std::size_t i = 0; i < e.target_modes.size(); ++i) {
    if (i) {
      modes += ", ";
      coeffs += ", ";
    }
    modes += std::to_string(e.target_modes[i]);
    coeffs += format_double(e.target_coeffs[i]);
  }
  c.set("data.modes", modes + "]");
  c.set("data.coeffs", coeffs + "]");
  c.set("flow.T", format_double(e.T));
  c.set("flow.dense_count", std::to_string(e.dense_count));
  c.set("flow.snapshot_kind",
        e.snapshots.kind == SnapshotSchedule::Kind::dense_stride ? "dense_stride"
                                                                 : "geometric");
  c.set("flow.snapshot_count", std::to_string(e.snapshots.count));
  c.set("flow.method", e.ode.method == OdeMethod::dopri45 ? "dopri45" : "rk4");
  c.set("flow.rel_tol", format_double(e.ode.rel_tol));
  c.set("flow.abs_tol", format_double(e.ode.abs_tol));
  c.set("flow.rk4_step", format_double(e.ode.rk4_step));
  c.set("eval.grid_count", std::to_string(e.grid_count));
  c.set("eval.record_cross", e.record_cross ? "true" : "false");
  c.set("eval.drift_grid_count", std::to_string(e.drift_grid_count));
  c.set("kernel.mc_seeds", std::to_string(e.mc_seeds));
  c.set("kernel.max_freq", std::to_string(e.max_freq));
  c.set("kernel.closed_form", e.use_closed_form ? "true" : "false");
  c.set("verify.training_identity", e.verify_training_identity ? "true" : "false");
  c.set("verify.function_identity", e.verify_function_identity ? "true" : "false");
  c.set("verify.corollary", e.verify_corollary ? "true" : "false");
  c.set("verify.envelopes", e.verify_envelopes ? "true" : "false");
  if (!e.corollary_k.empty()) {
    std::string ks = "[";
    for (std::size_t i = 0; i < e.corollary_k.size(); ++i) {
      if (i) ks += ", ";
      ks += std::to_string(e.corollary_k[i]);
    }
    c.set("verify.corollary_k", ks + "]");
  }
  c.set("verify.top_modes", std::to_string(e.top_mode_count));
  return c;
}

}  // namespace ntklab
