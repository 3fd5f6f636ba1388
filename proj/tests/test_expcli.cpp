#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "randopt/expcli.hpp"

namespace fs = std::filesystem;
using namespace randopt::expcli;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("randopt-expcli-test-" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

std::map<std::string, std::string> digests(const RunManifest& m) {
  std::map<std::string, std::string> d;
  for (const auto& o : m.outputs) d[o.path] = o.sha256;
  return d;
}

ParsedCommand parse(std::vector<std::string> args) {
  args.insert(args.begin(), "randopt");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return parse_command_line(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("validation names the offending key") {
  ExperimentConfig c;
  c.edge_prob = 2.0;
  try {
    c.validate();
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "edge_prob");
  }
  ExperimentConfig s;
  s.solver = "cdcl";
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("config file with flag overrides") {
  const fs::path dir = scratch("cfg");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "run.toml");
    f << "seed = 11\nn = 40\ndensities = [3.0, 4.0]\ntrials = 7\n";
  }
  const ParsedCommand p = parse({"ksat", "--config", (dir / "run.toml").string(), "--trials", "9"});
  REQUIRE(p.config.has_value());
  CHECK(p.config->command == Command::kKsat);
  CHECK(p.config->seed == 11);
  CHECK(p.config->n == 40);
  CHECK(p.config->densities == std::vector<double>{3.0, 4.0});
  CHECK(p.config->trials == 9);
}

TEST_CASE("unknown config keys are rejected") {
  const fs::path dir = scratch("unknown");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "bad.toml");
    f << "n = 10\nbogus_key = 3\n";
  }
  try {
    (void)parse({"gen", "--config", (dir / "bad.toml").string()});
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
  }
  CHECK_THROWS_AS(parse({"gen", "--solver", "magic"}), ConfigError);
  CHECK_THROWS_AS(parse({"gen", "--n", "ten"}), ConfigError);
}

TEST_CASE("report subcommand parses its directory") {
  const ParsedCommand p = parse({"report", "some/dir"});
  REQUIRE(p.report_dir.has_value());
  CHECK(*p.report_dir == fs::path("some/dir"));
  CHECK_FALSE(p.config.has_value());
}

TEST_CASE("minimal gen run and replay determinism") {
  ExperimentConfig c;
  c.command = Command::kGen;
  c.n = 10;
  c.out = scratch("gen-a");
  const RunManifest a = run_experiment(c);
  CHECK(fs::exists(c.out / "manifest.json"));
  CHECK(fs::exists(c.out / "instances/instance-0.rinst"));
  CHECK(a.instance_hashes.size() == 1);
  CHECK_FALSE(fs::exists(c.out.parent_path() / ".gen-a.staging"));
  c.out = scratch("gen-b");
  const RunManifest b = run_experiment(c);
  CHECK(digests(a) == digests(b));
  // Rerunning into the same directory replaces it.
  const RunManifest again = run_experiment(c);
  CHECK(digests(again) == digests(b));
}

TEST_CASE("ksat sweep yields one row per density and a clean report") {
  ExperimentConfig c;
  c.command = Command::kKsat;
  c.n = 20;
  c.trials = 5;
  c.densities = {2.0, 3.0, 4.0, 5.0, 6.0, 7.0};
  c.out = scratch("ksat");
  (void)run_experiment(c);
  const Report rep = emit_report(c.out);
  CHECK(rep.integrity_flags() == 0);
  CHECK(rep.rows.size() == 6);
  CHECK(rep.row_count_ok);
  CHECK(rep.rows[2].fields.at("density") == 4.0);
  CHECK(fs::exists(c.out / "report.txt"));
}

TEST_CASE("tampering and missing manifests are flagged") {
  ExperimentConfig c;
  c.command = Command::kGraphopt;
  c.n = 30;
  c.count = 3;
  c.algorithm = "both";
  c.out = scratch("tamper");
  (void)run_experiment(c);
  CHECK(emit_report(c.out).integrity_flags() == 0);
  {
    std::ofstream f(c.out / "results.csv", std::ios::app);
    f << "9,x,0,0,0,0\r\n";
  }
  const Report rep = emit_report(c.out);
  CHECK(rep.mismatched == std::vector<std::string>{"results.csv"});
  CHECK_FALSE(rep.row_count_ok);
  fs::remove(c.out / "summary.json");
  CHECK(emit_report(c.out).missing == std::vector<std::string>{"summary.json"});
  {
    std::ofstream f(c.out / "manifest.json");
    f << "{ not json";
  }
  CHECK_THROWS_AS(emit_report(c.out), IntegrityError);
  fs::remove(c.out / "manifest.json");
  CHECK_THROWS_AS(emit_report(c.out), IntegrityError);
}

TEST_CASE("failed runs leave no partial outputs") {
  ExperimentConfig c;
  c.command = Command::kGraphopt;
  c.n = 90;
  c.algorithm = "exact";
  c.exact_cap = 80;
  c.out = scratch("fail");
  try {
    (void)run_experiment(c);
    FAIL("expected a capacity error");
  } catch (const randopt::CapacityError& e) {
    CHECK(std::string(e.what()).find("graphopt/0") != std::string::npos);
  }
  CHECK_FALSE(fs::exists(c.out));
  CHECK_FALSE(fs::exists(c.out.parent_path() / ".fail.staging"));
}

TEST_CASE("every pipeline runs deterministically across job counts") {
  std::vector<ExperimentConfig> configs(6);
  configs[0].command = Command::kGen;
  configs[0].model = "ksat";
  configs[0].n = 20;
  configs[0].count = 2;
  configs[1].command = Command::kGraphopt;
  configs[1].model = "sparse-graph";
  configs[1].n = 200;
  configs[1].subset = "independent-set";
  configs[1].count = 4;
  configs[2].command = Command::kSpin;
  configs[2].model = "tensor";
  configs[2].n = 14;
  configs[2].count = 3;
  configs[3].command = Command::kParisi;
  configs[3].atoms = 1;
  configs[3].restarts = 2;
  configs[3].max_evaluations = 60;
  configs[3].order_class = "both";
  configs[3].convergence_levels = 2;
  configs[4].command = Command::kOgp;
  configs[4].model = "tensor";
  configs[4].n = 12;
  configs[4].level = 0.3;
  configs[5].command = Command::kOgp;
  configs[5].model = "graph";
  configs[5].n = 30;
  configs[5].ogp_mode = "stability";
  configs[5].stride = 20;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    auto c = configs[i];
    c.out = scratch("det-" + std::to_string(i) + "-a");
    c.jobs = 1;
    const RunManifest a = run_experiment(c);
    c.out = scratch("det-" + std::to_string(i) + "-b");
    c.jobs = 3;
    const RunManifest b = run_experiment(c);
    CHECK(digests(a) == digests(b));
    CHECK(emit_report(c.out).integrity_flags() == 0);
  }
}

TEST_CASE("csv parsing handles quoting") {
  const auto rows = parse_csv("a,b\r\n\"x,y\",\"say \"\"hi\"\"\"\r\n,\r\n");
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][0] == "x,y");
  CHECK(rows[1][1] == "say \"hi\"");
  CHECK(rows[2] == std::vector<std::string>{"", ""});
}
