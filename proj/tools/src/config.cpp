#include <cmath>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>

#include "randopt/expcli.hpp"
#include "randopt/parallel.hpp"

namespace randopt::expcli {

namespace {

constexpr std::pair<Command, const char*> kCommands[] = {
    {Command::kGen, "gen"},       {Command::kGraphopt, "graphopt"}, {Command::kSpin, "spin"},
    {Command::kParisi, "parisi"}, {Command::kKsat, "ksat"},         {Command::kOgp, "ogp"},
};

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key, "invalid value for '" + key + "': " + what);
}

void one_of(const std::string& value, const std::string& key, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (value == a) return;
  std::string list;
  for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
  throw ConfigError(key, "invalid value for '" + key + "': '" + value + "' (expected one of " + list + ")");
}

void add_options(CLI::App& app, ExperimentConfig& c) {
  app.add_option("--seed", c.seed, "Root seed")->capture_default_str();
  app.add_option("--out", c.out, "Run directory")->capture_default_str();
  app.add_option("--jobs", c.jobs, "Worker threads")->capture_default_str();
  app.add_option("--label", c.label, "Stream label")->capture_default_str();

  auto* model = app.add_option_group("model");
  model->add_option("--model", c.model, "graph | sparse-graph | tensor | ksat")->capture_default_str();
  model->add_option("--n", c.n)->capture_default_str();
  model->add_option("--edge-prob,--edge_prob", c.edge_prob)->capture_default_str();
  model->add_option("--degree", c.degree, "Average degree of the sparse graph")->capture_default_str();
  model->add_option("--order", c.order, "Tensor order p")->capture_default_str();
  model->add_option("--k", c.k, "Clause width")->capture_default_str();
  model->add_option("--density", c.density)->capture_default_str();
  model->add_option("--count", c.count, "Instances or seeds")->capture_default_str();

  auto* g = app.add_option_group("graphopt");
  g->add_option("--algorithm", c.algorithm, "greedy | exact | both")->capture_default_str();
  g->add_option("--subset", c.subset, "clique | independent-set")->capture_default_str();
  g->add_option("--exact-cap,--exact_cap", c.exact_cap)->capture_default_str();
  g->add_flag("--fixed-order,--fixed_order", c.fixed_order);

  auto* s = app.add_option_group("spin");
  s->add_option("--method", c.method, "brute | metropolis | walk")->capture_default_str();
  s->add_option("--sweeps", c.sweeps)->capture_default_str();
  s->add_option("--beta-start,--beta_start", c.beta_start)->capture_default_str();
  s->add_option("--beta-end,--beta_end", c.beta_end)->capture_default_str();
  s->add_option("--delta", c.delta)->capture_default_str();
  s->add_flag("--full-history,--full_history", c.full_history);

  auto* p = app.add_option_group("parisi");
  p->add_option("--xi", c.xi, "factorial | unit")->capture_default_str();
  p->add_option("--order-class,--order_class", c.order_class, "U | L | both")->capture_default_str();
  p->add_option("--atoms", c.atoms)->capture_default_str();
  p->add_option("--restarts", c.restarts)->capture_default_str();
  p->add_option("--max-evaluations,--max_evaluations", c.max_evaluations)->capture_default_str();
  p->add_option("--m-max,--m_max", c.m_max)->capture_default_str();
  p->add_option("--tv-budget,--tv_budget", c.tv_budget)->capture_default_str();
  p->add_option("--penalty", c.penalty, "standard | unweighted")->capture_default_str();
  p->add_option("--convergence-levels,--convergence_levels", c.convergence_levels)->capture_default_str();

  auto* ks = app.add_option_group("ksat");
  ks->add_option("--densities", c.densities)->delimiter(',')->capture_default_str();
  ks->add_option("--trials", c.trials)->capture_default_str();
  ks->add_option("--solver", c.solver, "dpll | walksat")->capture_default_str();
  ks->add_option("--node-budget,--node_budget", c.node_budget)->capture_default_str();
  ks->add_option("--max-flips,--max_flips", c.max_flips)->capture_default_str();
  ks->add_option("--noise", c.noise)->capture_default_str();

  auto* o = app.add_option_group("ogp");
  o->add_option("--ogp-mode,--ogp_mode", c.ogp_mode, "level-set | interpolation | stability")->capture_default_str();
  o->add_option("--level", c.level, "Admission level; omit for no filter");
  o->add_option("--sampler", c.sampler, "exhaustive | annealed")->capture_default_str();
  o->add_option("--samples", c.samples)->capture_default_str();
  o->add_option("--bins", c.bins)->capture_default_str();
  o->add_option("--metric", c.metric, "hamming | overlap")->capture_default_str();
  o->add_option("--min-width,--min_width", c.min_width)->capture_default_str();
  o->add_option("--mass-ceiling,--mass_ceiling", c.mass_ceiling)->capture_default_str();
  o->add_option("--radius", c.radius)->capture_default_str();
  o->add_option("--tuples", c.tuples)->capture_default_str();
  o->add_option("--m", c.m, "Tuple size M")->capture_default_str();
  o->add_option("--stride", c.stride)->capture_default_str();
}

}  // namespace

const char* command_name(Command c) noexcept {
  for (auto [cmd, name] : kCommands)
    if (cmd == c) return name;
  return "?";
}

Command command_from_name(const std::string& name) {
  for (auto [cmd, n] : kCommands)
    if (name == n) return cmd;
  throw ConfigError("command", "unknown command '" + name + "'");
}

void ExperimentConfig::validate() const {
  require(jobs >= 1, "jobs", "must be at least 1");
  require(!out.empty(), "out", "must not be empty");
  require(!label.empty(), "label", "must not be empty");
  one_of(model, "model", {"graph", "sparse-graph", "tensor", "ksat"});
  require(n >= 1, "n", "must be at least 1");
  require(edge_prob >= 0.0 && edge_prob <= 1.0, "edge_prob", "must lie in [0, 1]");
  if (model == "sparse-graph") require(degree >= 0.0 && degree <= n, "degree", "must lie in [0, n]");
  if (model == "tensor") {
    require(order >= 2, "order", "must be at least 2");
    require(order <= n, "order", "must not exceed n");
  }
  if (model == "ksat") {
    require(k >= 1 && k <= n, "k", "must lie in [1, n]");
    require(density >= 0.0 && std::isfinite(density), "density", "must be finite and nonnegative");
  }
  require(count >= 1, "count", "must be at least 1");

  one_of(algorithm, "algorithm", {"greedy", "exact", "both"});
  one_of(subset, "subset", {"clique", "independent-set"});
  one_of(method, "method", {"brute", "metropolis", "walk"});
  require(sweeps >= 1, "sweeps", "must be at least 1");
  require(beta_start >= 0.0 && beta_end >= 0.0, "beta_start", "inverse temperatures must be nonnegative");
  require(delta > 0.0 && delta < 1.0, "delta", "must lie in (0, 1)");

  one_of(xi, "xi", {"factorial", "unit"});
  one_of(order_class, "order_class", {"U", "L", "both"});
  one_of(penalty, "penalty", {"standard", "unweighted"});
  require(restarts >= 1, "restarts", "must be at least 1");
  require(max_evaluations >= 1, "max_evaluations", "must be at least 1");
  require(m_max > 0.0, "m_max", "must be positive");
  require(tv_budget > 0.0, "tv_budget", "must be positive");

  require(!densities.empty(), "densities", "must not be empty");
  for (double d : densities) require(d >= 0.0 && std::isfinite(d), "densities", "entries must be finite and nonnegative");
  require(trials >= 1, "trials", "must be at least 1");
  one_of(solver, "solver", {"dpll", "walksat"});
  require(noise >= 0.0 && noise <= 1.0, "noise", "must lie in [0, 1]");

  one_of(ogp_mode, "ogp_mode", {"level-set", "interpolation", "stability"});
  one_of(sampler, "sampler", {"exhaustive", "annealed"});
  one_of(metric, "metric", {"hamming", "overlap"});
  require(bins >= 1, "bins", "must be at least 1");
  require(samples >= 1, "samples", "must be at least 1");
  require(min_width > 0.0, "min_width", "must be positive");
  require(mass_ceiling >= 0.0, "mass_ceiling", "must be nonnegative");
  require(m >= 2, "m", "must be at least 2");
  require(tuples >= 1, "tuples", "must be at least 1");
  require(stride >= 1, "stride", "must be at least 1");
  if (level) require(!std::isnan(*level), "level", "must not be NaN");
  if (command == Command::kOgp && ogp_mode == "stability")
    require(model == "graph" || model == "sparse-graph", "model", "stability profiles need a graph model");
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j = {
      {"command", command_name(command)},
      {"seed", seed},
      {"out", out.generic_string()},
      {"jobs", jobs},
      {"label", label},
      {"model", model},
      {"n", n},
      {"edge_prob", edge_prob},
      {"degree", degree},
      {"order", order},
      {"k", k},
      {"density", density},
      {"count", count},
  };
  switch (command) {
    case Command::kGen:
      break;
    case Command::kGraphopt:
      j.update({{"algorithm", algorithm}, {"subset", subset}, {"exact_cap", exact_cap}, {"fixed_order", fixed_order}});
      break;
    case Command::kSpin:
      j.update({{"method", method},
                {"sweeps", sweeps},
                {"beta_start", beta_start},
                {"beta_end", beta_end},
                {"delta", delta},
                {"full_history", full_history}});
      break;
    case Command::kParisi:
      j.update({{"xi", xi},
                {"order_class", order_class},
                {"atoms", atoms},
                {"restarts", restarts},
                {"max_evaluations", max_evaluations},
                {"m_max", m_max},
                {"tv_budget", tv_budget},
                {"penalty", penalty},
                {"convergence_levels", convergence_levels}});
      break;
    case Command::kKsat:
      j.update({{"densities", densities},
                {"trials", trials},
                {"solver", solver},
                {"node_budget", node_budget},
                {"max_flips", max_flips},
                {"noise", noise}});
      break;
    case Command::kOgp:
      j.update({{"ogp_mode", ogp_mode},
                {"level", level ? nlohmann::json(*level) : nlohmann::json(nullptr)},
                {"sampler", sampler},
                {"samples", samples},
                {"bins", bins},
                {"metric", metric},
                {"min_width", min_width},
                {"mass_ceiling", mass_ceiling},
                {"radius", radius},
                {"tuples", tuples},
                {"m", m},
                {"stride", stride},
                {"sweeps", sweeps},
                {"beta_end", beta_end},
                {"max_flips", max_flips},
                {"subset", subset}});
      break;
  }
  return j;
}

ParsedCommand parse_command_line(int argc, const char* const* argv) {
  ExperimentConfig cfg;
  cfg.jobs = default_jobs();
  CLI::App app("Random optimization workbench", "randopt");
  app.set_version_flag("--version", tool_version());
  app.set_config("--config", "", "Key/value (TOML) config file; flags override its keys");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  add_options(app, cfg);

  std::map<CLI::App*, Command> subs;
  for (auto [cmd, name] : kCommands) {
    CLI::App* sub = app.add_subcommand(name, std::string("Run the ") + name + " pipeline");
    sub->fallthrough();
    subs[sub] = cmd;
  }
  std::string report_dir;
  CLI::App* report = app.add_subcommand("report", "Verify a run directory and summarize it");
  report->add_option("dir", report_dir, "Run directory")->required();

  ParsedCommand parsed;
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    parsed.exit_code = app.exit(e);
    return parsed;
  } catch (const CLI::CallForAllHelp& e) {
    parsed.exit_code = app.exit(e);
    return parsed;
  } catch (const CLI::CallForVersion& e) {
    parsed.exit_code = app.exit(e);
    return parsed;
  } catch (const CLI::ParseError& e) {
    throw ConfigError("", std::string("configuration error: ") + e.what());
  }

  if (report->parsed()) {
    parsed.report_dir = report_dir;
    return parsed;
  }
  for (auto& [sub, cmd] : subs)
    if (sub->parsed()) cfg.command = cmd;
  cfg.validate();
  parsed.config = std::move(cfg);
  return parsed;
}

}  // namespace randopt::expcli
