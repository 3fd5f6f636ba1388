#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "randopt/error.hpp"

namespace randopt::expcli {

/// Bad configuration: names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what) : Error(what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Missing or corrupt manifest.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

enum class Command { kGen, kGraphopt, kSpin, kParisi, kKsat, kOgp };
const char* command_name(Command c) noexcept;
Command command_from_name(const std::string& name);

/// Flat key/value experiment description. Every key is also a CLI flag.
struct ExperimentConfig {
  Command command = Command::kGen;
  std::uint64_t seed = 1;
  std::filesystem::path out = "run";
  unsigned jobs = 1;
  std::string label = "run";

  // model
  std::string model = "graph";  // graph | sparse-graph | tensor | ksat
  std::uint32_t n = 64;
  double edge_prob = 0.5;
  double degree = 5.0;
  std::uint32_t order = 2;  // p of the tensor
  std::uint32_t k = 3;
  double density = 4.0;
  std::size_t count = 1;

  // graphopt
  std::string algorithm = "greedy";  // greedy | exact | both
  std::string subset = "clique";     // clique | independent-set
  std::uint32_t exact_cap = 80;
  bool fixed_order = false;

  // spin
  std::string method = "walk";  // brute | metropolis | walk
  std::size_t sweeps = 200;
  double beta_start = 0.0;
  double beta_end = 3.0;
  double delta = 0.05;
  bool full_history = false;

  // parisi
  std::string xi = "factorial";  // factorial | unit
  std::string order_class = "U";  // U | L | both
  std::size_t atoms = 3;
  std::size_t restarts = 8;
  std::size_t max_evaluations = 1500;
  double m_max = 100.0;
  double tv_budget = 100.0;
  std::string penalty = "standard";  // standard | unweighted
  std::size_t convergence_levels = 3;

  // ksat
  std::vector<double> densities{3.0, 3.5, 4.0, 4.5, 5.0};
  std::size_t trials = 20;
  std::string solver = "dpll";  // dpll | walksat
  std::uint64_t node_budget = 50'000'000;
  std::uint64_t max_flips = 100'000;
  double noise = 0.5;

  // ogp
  std::string ogp_mode = "level-set";  // level-set | interpolation | stability
  std::optional<double> level;         // unset = vacuous
  std::string sampler = "exhaustive";  // exhaustive | annealed
  std::size_t samples = 64;
  std::size_t bins = 50;
  std::string metric = "hamming";  // hamming | overlap
  double min_width = 0.05;
  double mass_ceiling = 1e-3;
  std::uint32_t radius = 1;
  std::size_t tuples = 4;
  std::size_t m = 2;
  std::uint64_t stride = 1;

  /// Throws ConfigError naming the first invalid key.
  void validate() const;
  nlohmann::json to_json() const;
};

/// Parses `randopt <command> [--config file] [flags]`. Flags override the
/// config file. Returns nullopt after printing help. Throws ConfigError.
struct ParsedCommand {
  std::optional<ExperimentConfig> config;
  std::optional<std::filesystem::path> report_dir;
  int exit_code = 0;
};
ParsedCommand parse_command_line(int argc, const char* const* argv);

struct OutputRecord {
  std::string path;  // relative to the run directory
  std::string sha256;
  std::uint64_t bytes = 0;
};

struct RunManifest {
  nlohmann::json config;
  std::string tool_version;
  std::vector<std::string> instance_hashes;
  nlohmann::json task_seeds;  // task name -> {seed, label}
  double wall_seconds = 0.0;
  std::vector<OutputRecord> outputs;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

/// Runs the pipeline into a staging directory next to `config.out`, then
/// promotes it in one rename. Any existing run directory is replaced.
RunManifest run_experiment(const ExperimentConfig& config);

struct ReportRow {
  std::string source;
  nlohmann::ordered_json fields;
};

struct Report {
  std::string command;
  std::size_t checked = 0;
  std::vector<std::string> mismatched;
  std::vector<std::string> missing;
  std::vector<ReportRow> rows;
  std::optional<std::size_t> expected_rows;
  bool row_count_ok = true;

  std::size_t integrity_flags() const noexcept { return mismatched.size() + missing.size(); }
  nlohmann::json to_json() const;
  std::string to_text() const;
};

/// Re-hashes every output listed in the manifest and merges tabular outputs.
/// Writes report.json and report.txt into the run directory.
Report emit_report(const std::filesystem::path& run_dir);

/// Splits RFC-4180 text into records of fields.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

const char* tool_version() noexcept;

}  // namespace randopt::expcli
