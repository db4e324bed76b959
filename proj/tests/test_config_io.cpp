#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <string>

#include "ntklab/config.hpp"
#include "ntklab/csvio.hpp"
#include "ntklab/svg.hpp"

using namespace ntklab;
namespace fs = std::filesystem;

namespace {

const char* kSample = R"(# experiment description
[run]
name = "desk check"   # quoted strings may hold spaces and '#'
seed = 42

[network]
m = 32
d = 2
activation = erf

[data]
modes = [1, 2]
coeffs = [1.0, 0.5]
)";

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "ntklab-io-tests";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("config parser handles sections, comments, and quotes", "[config]") {
  const Config cfg = Config::parse(kSample);
  CHECK(cfg.get_string("run.name") == "desk check");
  CHECK(cfg.get_uint("run.seed") == 42);
  CHECK(cfg.get_int("network.m") == 32);
  CHECK(cfg.get_string("network.activation") == "erf");
  CHECK(cfg.has("data.modes"));
  CHECK_FALSE(cfg.has("data.sampling"));

  const auto modes = cfg.get_int_list("data.modes");
  REQUIRE(modes.size() == 2);
  CHECK(modes[0] == 1);
  CHECK(modes[1] == 2);
  const auto coeffs = cfg.get_double_list("data.coeffs");
  REQUIRE(coeffs.size() == 2);
  CHECK(coeffs[1] == 0.5);

  // Defaults apply only for absent keys.
  CHECK(cfg.get_int("network.m", 99) == 32);
  CHECK(cfg.get_int("network.missing", 99) == 99);
  CHECK(cfg.get_bool("eval.record_cross", false) == false);
}

TEST_CASE("config parser rejects malformed input with the offending key",
          "[config]") {
  REQUIRE_THROWS_WITH(Config::parse("[a]\nx = 1\nx = 2\n"),
                      Catch::Matchers::ContainsSubstring("duplicate"));
  REQUIRE_THROWS_WITH(Config::parse("x =\n"),
                      Catch::Matchers::ContainsSubstring("empty value"));
  REQUIRE_THROWS_WITH(Config::parse("just words\n"),
                      Catch::Matchers::ContainsSubstring("line 1"));
  REQUIRE_THROWS_WITH(Config::parse("[bad\n"),
                      Catch::Matchers::ContainsSubstring("section"));

  const Config cfg = Config::parse("[a]\nx = hello\n");
  REQUIRE_THROWS_WITH(cfg.get_int("a.x"),
                      Catch::Matchers::ContainsSubstring("a.x"));
  REQUIRE_THROWS_WITH(cfg.get_bool("a.x"),
                      Catch::Matchers::ContainsSubstring("boolean"));
  REQUIRE_THROWS_WITH(cfg.get_double("a.missing"),
                      Catch::Matchers::ContainsSubstring("missing required"));
  REQUIRE_THROWS_WITH(cfg.get_double_list("a.x"),
                      Catch::Matchers::ContainsSubstring("list"));
}

TEST_CASE("canonical text and hash ignore ordering", "[config]") {
  const Config a = Config::parse("[n]\nm = 4\n[r]\nseed = 7\n");
  const Config b = Config::parse("[r]\nseed = 7\n[n]\nm =   4\n");
  CHECK(a.canonical() == b.canonical());
  CHECK(a.hash() == b.hash());

  const Config c = Config::parse("[n]\nm = 5\n[r]\nseed = 7\n");
  CHECK(a.hash() != c.hash());

  // Lists canonicalize their separators.
  const Config l1 = Config::parse("ks = [1,2,3]\n");
  const Config l2 = Config::parse("ks = [1, 2,   3]\n");
  CHECK(l1.canonical() == "ks = [1, 2, 3]\n");
  CHECK(l1.hash() == l2.hash());
}

TEST_CASE("experiment config applies defaults and validates", "[config]") {
  const ExperimentConfig e =
      experiment_config_from(Config::parse("[network]\nm = 16\n"));
  CHECK(e.m == 16);
  CHECK(e.d == 2);
  CHECK(e.act == Activation::tanh);
  CHECK(e.scheme == InitScheme::doubling);
  CHECK(e.n == 32);
  CHECK(e.T == 1.0);
  CHECK(e.verify_envelopes);
  CHECK_FALSE(e.verify_corollary);

  REQUIRE_THROWS_WITH(
      experiment_config_from(Config::parse("[network]\nm = 15\n")),
      Catch::Matchers::ContainsSubstring("network.m") &&
          Catch::Matchers::ContainsSubstring("even"));
  REQUIRE_THROWS_WITH(
      experiment_config_from(Config::parse("[network]\nm = 16\nd = 3\n")),
      Catch::Matchers::ContainsSubstring("network.d"));
  REQUIRE_THROWS_WITH(
      experiment_config_from(
          Config::parse("[data]\nmodes = [1, 2]\ncoeffs = [1.0]\n")),
      Catch::Matchers::ContainsSubstring("data.coeffs"));
  REQUIRE_THROWS_WITH(
      experiment_config_from(
          Config::parse("[verify]\nfunction_identity = true\n")),
      Catch::Matchers::ContainsSubstring("record_cross"));
  REQUIRE_THROWS_WITH(
      experiment_config_from(Config::parse(
          "[flow]\ndense_count = 16\n[verify]\ntraining_identity = true\n")),
      Catch::Matchers::ContainsSubstring("odd"));
  REQUIRE_THROWS_WITH(
      experiment_config_from(
          Config::parse("[kernel]\nclosed_form = true\n")),
      Catch::Matchers::ContainsSubstring("erf"));

  // The target helper validates mode/coef pairs.
  const BandlimitedTarget t = e.target();
  CHECK(t.max_mode() == 1);
}

TEST_CASE("resolved config round-trips and hashes stably", "[config]") {
  ExperimentConfig e;
  e.name = "round trip";
  e.seed = 9;
  e.m = 64;
  e.act = Activation::erf;
  e.use_closed_form = true;
  e.T = 0.75;
  e.corollary_k = {1, 2, 5};

  const Config c = resolved_config(e);
  const ExperimentConfig back = experiment_config_from(c);
  CHECK(back.name == e.name);
  CHECK(back.seed == e.seed);
  CHECK(back.m == e.m);
  CHECK(back.act == e.act);
  CHECK(back.use_closed_form);
  CHECK(back.T == e.T);
  CHECK(back.corollary_k == e.corollary_k);

  // Identical resolved configs hash identically (manifest identity).
  CHECK(resolved_config(back).hash() == c.hash());
  CHECK(resolved_config(back).canonical() == c.canonical());
}

TEST_CASE("format_double round-trips through parsing", "[io]") {
  for (double v : {0.1, 1.0 / 3.0, 2.4391608337585082, 1e-300, -6.25e17,
                   0.0, 123456789.0}) {
    const std::string s = format_double(v);
    double back = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), back);
    REQUIRE(res.ec == std::errc());
    CHECK(back == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(4.0) == "4");
}

TEST_CASE("csv matrices round-trip exactly", "[io]") {
  const fs::path path = temp_dir() / "matrix.csv";
  Mat M(3, 2);
  M << 0.1, -2.5e-7, 1.0 / 3.0, 4.0, 5.5, 1e300;
  write_matrix_csv(path.string(), {"alpha", "beta"}, M);

  const CsvTable table = read_csv_table(path.string());
  REQUIRE(table.header.size() == 2);
  CHECK(table.header[0] == "alpha");
  REQUIRE(table.rows.size() == 3);

  const Mat back = read_matrix_csv(path.string());
  REQUIRE(back.rows() == 3);
  REQUIRE(back.cols() == 2);
  CHECK(back == M);  // bit-exact via shortest round-trip formatting

  const Vec col = table.numeric_column("beta");
  REQUIRE(col.size() == 3);
  CHECK(col(2) == 1e300);
  REQUIRE_THROWS_AS(table.column("gamma"), std::invalid_argument);

  // Ragged rows are rejected.
  atomic_write_text((temp_dir() / "ragged.csv").string(), "a,b\n1\n");
  REQUIRE_THROWS_WITH(read_csv_table((temp_dir() / "ragged.csv").string()),
                      Catch::Matchers::ContainsSubstring("ragged"));
}

TEST_CASE("atomic writes leave no temporaries and replace content", "[io]") {
  const fs::path dir = temp_dir() / "atomic";
  fs::remove_all(dir);
  const fs::path path = dir / "nested" / "out.txt";
  atomic_write_text(path.string(), "first");
  CHECK(read_text(path.string()) == "first");
  atomic_write_text(path.string(), "second");
  CHECK(read_text(path.string()) == "second");

  int non_target = 0;
  for (const auto& entry : fs::directory_iterator(path.parent_path()))
    if (entry.path() != path) ++non_target;
  CHECK(non_target == 0);
}

TEST_CASE("gram matrices round-trip through the binary format", "[io]") {
  const fs::path path = temp_dir() / "gram.bin";
  Mat H(3, 3);
  H << 2.0, 0.5, 0.1, 0.5, 2.0, 0.5, 0.1, 0.5, 2.0;
  const GramPair g = make_gram_pair(H, 1.25, KernelTag::empirical_t);
  write_gram_binary(path.string(), g);

  const GramPair back = read_gram_binary(path.string());
  CHECK(back.H == g.H);
  CHECK(back.G == g.G);
  CHECK(back.t == 1.25);
  CHECK(back.tag == KernelTag::empirical_t);

  // Corrupt magic and truncation are both detected.
  std::string bytes = read_text(path.string());
  std::string bad = bytes;
  bad[0] = 'X';
  atomic_write_text(path.string(), bad);
  REQUIRE_THROWS_WITH(read_gram_binary(path.string()),
                      Catch::Matchers::ContainsSubstring("magic"));
  atomic_write_text(path.string(), bytes.substr(0, bytes.size() - 9));
  REQUIRE_THROWS_AS(read_gram_binary(path.string()), std::runtime_error);
}

TEST_CASE("checkpoints round-trip and validate the parameter count", "[io]") {
  const fs::path path = temp_dir() / "theta.bin";
  Checkpoint ck;
  ck.m = 4;
  ck.d = 2;
  ck.scheme = InitScheme::doubling;
  ck.seed = 77;
  ck.t = 0.5;
  ck.theta = Vec::LinSpaced(4 * 2 + 2 * 4 + 1, -1.0, 1.0);
  write_checkpoint(path.string(), ck);

  const Checkpoint back = read_checkpoint(path.string());
  CHECK(back.m == 4);
  CHECK(back.d == 2);
  CHECK(back.scheme == InitScheme::doubling);
  CHECK(back.seed == 77);
  CHECK(back.t == 0.5);
  CHECK(back.theta == ck.theta);

  Checkpoint bad = ck;
  bad.theta = Vec::Zero(5);  // wrong parameter count for (m, d)
  write_checkpoint(path.string(), bad);
  REQUIRE_THROWS_WITH(read_checkpoint(path.string()),
                      Catch::Matchers::ContainsSubstring("parameter count"));
}

TEST_CASE("svg plots are deterministic and validate their input", "[io]") {
  SvgSeries s1{"decay", {0.0, 1.0, 2.0}, {1.0, 0.5, 0.25}};
  SvgSeries s2{"flat", {0.0, 1.0, 2.0}, {0.4, 0.4, 0.4}};
  const std::string a = svg_line_plot("title", "t", "value", {s1, s2});
  const std::string b = svg_line_plot("title", "t", "value", {s1, s2});
  CHECK(a == b);
  CHECK(a.find("<svg") != std::string::npos);
  CHECK(a.find("decay") != std::string::npos);

  const std::string log_plot =
      svg_line_plot("title", "t", "value", {s1}, true);
  CHECK(log_plot.find("<svg") != std::string::npos);

  SvgSeries zero{"zero", {0.0, 1.0}, {1.0, 0.0}};
  REQUIRE_THROWS_AS(svg_line_plot("t", "x", "y", {zero}, true),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(svg_line_plot("t", "x", "y", {}), std::invalid_argument);
}
