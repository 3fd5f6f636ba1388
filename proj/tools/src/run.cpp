#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "csv.hpp"
#include "randopt/expcli.hpp"
#include "randopt/graphopt.hpp"
#include "randopt/instance_io.hpp"
#include "randopt/instances.hpp"
#include "randopt/interpolation.hpp"
#include "randopt/ksat.hpp"
#include "randopt/ogp.hpp"
#include "randopt/parallel.hpp"
#include "randopt/parisi.hpp"
#include "randopt/spin.hpp"

namespace fs = std::filesystem;

namespace randopt::expcli {

#ifndef RANDOPT_VERSION
#define RANDOPT_VERSION "0.0.0"
#endif

const char* tool_version() noexcept { return RANDOPT_VERSION; }

namespace {

class RunWriter {
 public:
  explicit RunWriter(fs::path root) : root_(std::move(root)) {}

  const fs::path& root() const noexcept { return root_; }

  void text(const std::string& rel, const std::string& content) {
    const fs::path p = root_ / rel;
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << content;
    if (!out) throw Error("cannot write " + p.string());
    out.close();
    record(rel);
  }

  void json(const std::string& rel, const nlohmann::json& j) { text(rel, j.dump(2) + "\n"); }

  /// Registers a file some other writer produced.
  void record(const std::string& rel) {
    const fs::path p = root_ / rel;
    outputs_.push_back({rel, sha256_file(p), static_cast<std::uint64_t>(fs::file_size(p))});
  }

  std::vector<OutputRecord> outputs() const {
    auto out = outputs_;
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
    return out;
  }

 private:
  fs::path root_;
  std::vector<OutputRecord> outputs_;
};

struct Context {
  const ExperimentConfig& cfg;
  RunWriter& writer;
  RunManifest& manifest;
  RngStream root;

  RngStream task(const std::string& name) {
    RngStream s = root.child(name);
    manifest.task_seeds[name] = {{"seed", s.seed()}, {"label", s.label()}};
    return s;
  }
};

template <class F>
auto with_task_context(const std::string& task, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const CapacityError& e) {
    throw CapacityError("task " + task + ": " + e.what());
  } catch (const BudgetError& e) {
    throw BudgetError("task " + task + ": " + e.what());
  }
}

Instance make_instance(const ExperimentConfig& c, RngStream& rng) {
  if (c.model == "graph") return gen_er_graph(c.n, c.edge_prob, rng);
  if (c.model == "sparse-graph") return gen_sparse_graph(c.n, c.degree, rng);
  if (c.model == "tensor") return gen_gaussian_tensor(c.n, c.order, rng);
  return gen_ksat(c.n, static_cast<std::size_t>(std::llround(c.density * c.n)), c.k, rng);
}

SubsetKind subset_kind(const ExperimentConfig& c) {
  return c.subset == "clique" ? SubsetKind::kClique : SubsetKind::kIndependentSet;
}

std::string task_name(const char* prefix, std::size_t i) { return std::string(prefix) + "/" + std::to_string(i); }

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void run_gen(Context& ctx) {
  const auto& c = ctx.cfg;
  CsvTable index({"index", "kind", "sha256"});
  for (std::size_t i = 0; i < c.count; ++i) {
    const std::string name = task_name("gen", i);
    RngStream rng = ctx.task(name);
    const Instance inst = make_instance(c, rng);
    const std::string stem = "instances/instance-" + std::to_string(i);
    fs::create_directories(ctx.writer.root() / "instances");
    const std::string hash = write_instance_file(ctx.writer.root() / stem, inst);
    ctx.writer.record(stem + ".rinst");
    ctx.writer.record(stem + ".json");
    if (const auto* f = std::get_if<KSatFormula>(&inst)) {
      std::ostringstream cnf;
      write_dimacs(cnf, *f);
      ctx.writer.text(stem + ".cnf", cnf.str());
    }
    ctx.manifest.instance_hashes.push_back(hash);
    index.row(i, kind_name(kind_of(inst)), hash);
  }
  ctx.writer.text("instances.csv", index.str());
}

void run_graphopt(Context& ctx) {
  const auto& c = ctx.cfg;
  if (c.model != "graph" && c.model != "sparse-graph")
    throw ConfigError("model", "graphopt needs model = graph or sparse-graph");
  const SubsetKind kind = subset_kind(c);
  const bool greedy = c.algorithm != "exact";
  const bool exact = c.algorithm != "greedy";

  struct Row {
    std::string hash;
    std::uint64_t edges = 0;
    std::size_t greedy = 0;
    std::size_t exact = 0;
  };
  std::vector<Row> rows(c.count);
  std::vector<RngStream> streams;
  for (std::size_t i = 0; i < c.count; ++i) streams.push_back(ctx.task(task_name("graphopt", i)));
  parallel_for(c.count, c.jobs, [&](std::size_t i) {
    with_task_context(task_name("graphopt", i), [&] {
      RngStream inst_rng = streams[i].child("instance");
      const Instance inst = make_instance(c, inst_rng);
      const auto& g = std::get<ErGraph>(inst);
      Row& r = rows[i];
      r.hash = content_hash(inst);
      r.edges = g.edge_count();
      if (greedy) {
        RngStream alg = streams[i].child("greedy");
        const VertexSubset s = kind == SubsetKind::kClique ? karp_greedy_clique(g, alg, c.fixed_order)
                                                           : greedy_independent_set(g, alg, c.fixed_order);
        if (!verify_subset(g, s)) throw Error("greedy produced an invalid subset");
        r.greedy = s.size();
      }
      if (exact) {
        ExactOptions opts;
        opts.max_vertices = c.exact_cap;
        const VertexSubset s = exact_optimum(g, kind, opts);
        if (!verify_subset(g, s)) throw Error("exact search produced an invalid subset");
        r.exact = s.size();
      }
    });
  });

  CsvTable table({"index", "instance_hash", "n", "edge_count", "greedy_size", "exact_size"});
  std::vector<double> gs, es;
  for (std::size_t i = 0; i < c.count; ++i) {
    const Row& r = rows[i];
    ctx.manifest.instance_hashes.push_back(r.hash);
    table.row(i, r.hash, c.n, r.edges, greedy ? std::to_string(r.greedy) : "", exact ? std::to_string(r.exact) : "");
    if (greedy) gs.push_back(static_cast<double>(r.greedy));
    if (exact) es.push_back(static_cast<double>(r.exact));
  }
  ctx.writer.text("results.csv", table.str());

  const double p = c.model == "graph" ? c.edge_prob : c.degree / c.n;
  const double q = kind == SubsetKind::kClique ? p : 1.0 - p;
  nlohmann::json summary = {{"instances", c.count}, {"subset", c.subset}};
  if (greedy) summary["mean_greedy_size"] = mean(gs);
  if (exact) summary["mean_exact_size"] = mean(es);
  if (c.n >= 2 && q > 0.0) {
    const MomentCurve curve = first_moment_curve(c.n, q);
    std::ostringstream csv;
    write_moment_csv(csv, curve);
    ctx.writer.text("moments.csv", csv.str());
    summary["first_moment_crossing"] = crossing_point(curve);
  }
  ctx.writer.json("summary.json", summary);
}

void run_spin(Context& ctx) {
  const auto& c = ctx.cfg;
  if (c.model != "tensor") throw ConfigError("model", "spin needs model = tensor");
  const bool reference = c.n <= 20;
  struct Row {
    std::string hash;
    double energy = 0.0;
    double ground = NAN;
    std::string trace;
  };
  std::vector<Row> rows(c.count);
  std::vector<RngStream> streams;
  for (std::size_t i = 0; i < c.count; ++i) streams.push_back(ctx.task(task_name("spin", i)));
  parallel_for(c.count, c.jobs, [&](std::size_t i) {
    with_task_context(task_name("spin", i), [&] {
      RngStream inst_rng = streams[i].child("instance");
      const Instance inst = make_instance(c, inst_rng);
      const auto& j = std::get<GaussianTensor>(inst);
      Row& r = rows[i];
      r.hash = content_hash(inst);
      std::ostringstream trace;
      if (c.method == "brute") {
        r.energy = brute_force_ground_state(j).energy;
      } else if (c.method == "metropolis") {
        RngStream alg = streams[i].child("metropolis");
        const ChainSummary chain = metropolis_chain(j, {c.beta_start, c.beta_end}, c.sweeps, alg);
        r.energy = chain.best_energy;
        write_energy_trace_csv(trace, chain.energy_trace);
      } else {
        RngStream alg = streams[i].child("walk");
        WalkOptions opts;
        opts.delta = c.delta;
        opts.full_history = c.full_history;
        const WalkResult w = guided_walk(j, alg, opts);
        r.energy = w.energy;
        write_walk_trace_csv(trace, w.trace);
      }
      r.trace = trace.str();
      if (reference) r.ground = c.method == "brute" ? r.energy : brute_force_ground_state(j).energy;
    });
  });

  CsvTable table({"index", "instance_hash", "n", "p", "energy", "ground_state", "ratio"});
  std::vector<double> energies, ratios;
  for (std::size_t i = 0; i < c.count; ++i) {
    const Row& r = rows[i];
    ctx.manifest.instance_hashes.push_back(r.hash);
    energies.push_back(r.energy);
    if (reference) {
      ratios.push_back(r.energy / r.ground);
      table.row(i, r.hash, c.n, c.order, r.energy, r.ground, r.energy / r.ground);
    } else {
      table.row(i, r.hash, c.n, c.order, r.energy, "", "");
    }
    if (!r.trace.empty()) ctx.writer.text("traces/" + c.method + "-" + std::to_string(i) + ".csv", r.trace);
  }
  ctx.writer.text("results.csv", table.str());
  nlohmann::json summary = {{"instances", c.count}, {"method", c.method}, {"mean_energy", mean(energies)}};
  if (reference) summary["mean_ratio"] = mean(ratios);
  ctx.writer.json("summary.json", summary);
}

void run_parisi(Context& ctx) {
  const auto& c = ctx.cfg;
  const MixtureSpec spec =
      MixtureSpec::pure(c.order, c.xi == "unit" ? XiNormalization::kUnit : XiNormalization::kFactorial);
  MinimizeOptions opts;
  opts.restarts = c.restarts;
  opts.max_evaluations = c.max_evaluations;
  opts.m_max = c.m_max;
  opts.tv_budget = c.tv_budget;
  opts.penalty = c.penalty == "unweighted" ? PenaltyForm::kUnweighted : PenaltyForm::kStandard;
  opts.jobs = c.jobs;
  opts.seed = mix64(c.seed ^ fnv1a64(ctx.root.label()));
  ctx.manifest.task_seeds["parisi"] = {{"seed", opts.seed}, {"label", "parisi-starts"}};

  std::vector<std::pair<OrderClass, std::vector<MinimizeResult>>> runs;
  if (c.order_class != "L") runs.emplace_back(OrderClass::kU, minimize_nested(spec, OrderClass::kU, c.atoms, opts));
  if (c.order_class == "L") {
    runs.emplace_back(OrderClass::kL, minimize_nested(spec, OrderClass::kL, c.atoms, opts));
  } else if (c.order_class == "both") {
    std::vector<MinimizeResult> l;
    for (std::size_t k = 0; k <= c.atoms; ++k) {
      MinimizeOptions lo = opts;
      lo.warm_start = runs.front().second[k].mu;
      l.push_back(minimize_functional(spec, OrderClass::kL, k, lo));
    }
    runs.emplace_back(OrderClass::kL, std::move(l));
  }

  CsvTable table(
      {"class", "atoms", "value", "psi00", "penalty", "discretization_error", "converged", "evaluations"});
  nlohmann::json results = nlohmann::json::array();
  for (const auto& [cls, rs] : runs) {
    for (std::size_t k = 0; k < rs.size(); ++k) {
      const auto& r = rs[k];
      table.row(class_name(cls), k, r.value.value, r.value.psi00, r.value.penalty, r.value.discretization_error,
                r.converged, r.evaluations);
      nlohmann::json j = to_json(r);
      j["class"] = class_name(cls);
      j["atoms"] = k;
      results.push_back(std::move(j));
    }
  }
  ctx.writer.text("values.csv", table.str());

  nlohmann::json doc = {{"p", c.order}, {"xi", c.xi}, {"penalty", c.penalty}, {"results", results}};
  if (runs.size() == 2) {
    nlohmann::json gaps = nlohmann::json::array();
    for (std::size_t k = 0; k <= c.atoms; ++k) {
      const double u = runs[0].second[k].value.value;
      const double l = runs[1].second[k].value.value;
      gaps.push_back({{"atoms", k}, {"value_U", u}, {"value_L", l}, {"gap", u - l}, {"nested", l <= u + 1e-6}});
    }
    doc["gaps"] = gaps;
  }
  ctx.writer.json("parisi.json", doc);

  const MinimizeResult& best = runs.front().second.back();
  std::ostringstream conv;
  write_convergence_csv(conv, grid_convergence(best.mu, spec, PdeGrid::for_spec(spec, c.m_max), c.convergence_levels));
  ctx.writer.text("convergence.csv", conv.str());
}

void run_ksat(Context& ctx) {
  const auto& c = ctx.cfg;
  SatCurveOptions opts;
  opts.n = c.n;
  opts.k = c.k;
  opts.trials = c.trials;
  opts.solver = c.solver == "walksat" ? SatSolver::kWalkSat : SatSolver::kDpll;
  opts.dpll.node_budget = c.node_budget;
  opts.walk.max_flips = c.max_flips;
  opts.walk.noise = c.noise;
  opts.jobs = c.jobs;
  const RngStream sweep = ctx.task("ksat");
  const auto curve = with_task_context("ksat", [&] { return sat_curve(c.densities, opts, sweep); });

  std::ostringstream csv;
  write_sat_curve_csv(csv, curve);
  ctx.writer.text("sat_curve.csv", csv.str());

  CsvTable detail({"density", "trials", "satisfied", "undecided", "sat_fraction", "mean_work"});
  for (const auto& pt : curve) detail.row(pt.density, pt.trials, pt.satisfied, pt.undecided, pt.sat_fraction, pt.mean_work);
  ctx.writer.text("sweep_detail.csv", detail.str());

  CsvTable moments({"density", "log_expected_solutions"});
  for (const auto& pt : sat_moment_curve(c.n, c.k, c.densities)) moments.row(pt.density, pt.log_expected_solutions);
  ctx.writer.text("moments.csv", moments.str());

  nlohmann::json summary = {{"n", c.n}, {"k", c.k}, {"points", curve.size()},
                            {"first_moment_density", first_moment_density(c.k)}};
  const auto half = half_crossing(curve);
  summary["half_crossing"] = half ? nlohmann::json(*half) : nlohmann::json(nullptr);
  if (curve.size() >= 3) {
    const SlopeFit fit = fit_sat_slope(curve);
    summary["slope"] = fit.slope;
    summary["slope_stderr"] = fit.slope_stderr;
  }
  ctx.writer.json("summary.json", summary);
}

void run_ogp(Context& ctx) {
  const auto& c = ctx.cfg;
  RngStream inst_rng = ctx.task("ogp/instance");
  const Instance inst = make_instance(c, inst_rng);
  const std::string hash = content_hash(inst);
  ctx.manifest.instance_hashes.push_back(hash);
  const double level = c.level.value_or(-INFINITY);

  SamplerConfig sampler;
  sampler.kind = c.sampler == "annealed" ? SamplerKind::kAnnealed : SamplerKind::kExhaustive;
  sampler.sweeps = c.sweeps;
  sampler.beta = c.beta_end;
  sampler.max_flips = c.max_flips;
  sampler.jobs = c.jobs;
  const OverlapMetric metric = c.metric == "overlap" ? OverlapMetric::kOverlap : OverlapMetric::kNormalizedHamming;

  if (c.ogp_mode == "level-set") {
    const Model model{inst, subset_kind(c)};
    RngStream rng = ctx.task("ogp/sample");
    NearOptimumSet set =
        with_task_context("ogp/sample", [&] { return sample_near_optima(model, level, c.samples, sampler, rng); });
    set.instance_hash = hash;
    const std::size_t violations = admission_violations(model, set);
    ctx.writer.json("near_optima.json", to_json(set));
    nlohmann::json summary = {{"instance_hash", hash},
                              {"solutions", set.solutions.size()},
                              {"admission_violations", violations},
                              {"budget_exhausted", set.budget_exhausted}};
    if (set.solutions.size() >= 2) {
      const OverlapHistogram hist = overlap_histogram(set, metric, c.bins);
      std::ostringstream csv;
      write_histogram_csv(csv, hist);
      ctx.writer.text("histogram.csv", csv.str());
      const GapReport gap = detect_gap(hist, {c.min_width, c.mass_ceiling, GapOptions{}.flank_mass});
      ctx.writer.json("gap.json", to_json(gap));
      summary["gap_present"] = gap.present;
    } else {
      summary["gap_present"] = nullptr;
    }
    if (sampler.kind == SamplerKind::kExhaustive) {
      const ClusterReport clusters = cluster_solutions(set.solutions, c.radius);
      ctx.writer.json("clusters.json", to_json(clusters));
      summary["components"] = clusters.component_sizes.size();
    }
    ctx.writer.json("summary.json", summary);
    return;
  }

  const InterpolationPath path(inst, ctx.task("ogp/path"));
  if (c.ogp_mode == "interpolation") {
    InterpolationOptions opts;
    opts.tuples = c.tuples;
    opts.subset_kind = subset_kind(c);
    const RngStream rng = ctx.task("ogp/interpolation");
    const auto exp = with_task_context(
        "ogp/interpolation", [&] { return interpolation_overlap_experiment(path, level, c.m, sampler, rng, opts); });
    nlohmann::json samples = nlohmann::json::array();
    std::size_t failures = 0;
    for (const auto& s : exp.samples) {
      samples.push_back(to_json(s));
      failures += s.failures.size();
    }
    nlohmann::json doc = {{"instance_hash", hash}, {"path_length", path.length()}, {"samples", samples}};
    if (exp.endpoint) {
      doc["endpoint"] = {{"pairs", exp.endpoint->pairs},
                         {"mean_overlap", exp.endpoint->mean_overlap},
                         {"mean_distance", exp.endpoint->mean_distance}};
    }
    ctx.writer.json("multioverlap.json", doc);
    ctx.writer.json("summary.json", {{"instance_hash", hash}, {"tuples", exp.samples.size()}, {"failures", failures}});
    return;
  }

  const std::uint64_t seed = ctx.task("ogp/stability").seed();
  const StabilityProfile prof = greedy_stability_profile(path, c.stride, seed, subset_kind(c));
  CsvTable table({"position", "distance"});
  for (std::size_t i = 0; i < prof.positions.size(); ++i) table.row(prof.positions[i], prof.distances[i]);
  ctx.writer.text("stability.csv", table.str());
  ctx.writer.json("summary.json", {{"instance_hash", hash}, {"max_distance", prof.max_distance}});
}

fs::path sibling(const fs::path& out, const std::string& suffix) {
  const fs::path abs = fs::absolute(out);
  return abs.parent_path() / ("." + abs.filename().string() + suffix);
}

}  // namespace

nlohmann::json RunManifest::to_json() const {
  nlohmann::json outs = nlohmann::json::array();
  for (const auto& o : outputs) outs.push_back({{"path", o.path}, {"sha256", o.sha256}, {"bytes", o.bytes}});
  return {{"config", config},         {"tool_version", tool_version},
          {"instance_hashes", instance_hashes}, {"task_seeds", task_seeds},
          {"wall_seconds", wall_seconds}, {"outputs", outs}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.config = j.at("config");
    m.tool_version = j.at("tool_version").get<std::string>();
    m.instance_hashes = j.at("instance_hashes").get<std::vector<std::string>>();
    m.task_seeds = j.at("task_seeds");
    m.wall_seconds = j.at("wall_seconds").get<double>();
    for (const auto& o : j.at("outputs"))
      m.outputs.push_back({o.at("path").get<std::string>(), o.at("sha256").get<std::string>(),
                           o.at("bytes").get<std::uint64_t>()});
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("corrupt manifest: ") + e.what());
  }
  return m;
}

RunManifest run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const fs::path out = fs::absolute(config.out);
  const fs::path staging = sibling(out, ".staging");
  fs::remove_all(staging);
  fs::create_directories(staging);

  RunManifest manifest;
  manifest.config = config.to_json();
  manifest.tool_version = tool_version();
  manifest.task_seeds = nlohmann::json::object();
  RunWriter writer(staging);
  Context ctx{config, writer, manifest, RngStream(config.seed, config.label)};
  try {
    switch (config.command) {
      case Command::kGen: run_gen(ctx); break;
      case Command::kGraphopt: run_graphopt(ctx); break;
      case Command::kSpin: run_spin(ctx); break;
      case Command::kParisi: run_parisi(ctx); break;
      case Command::kKsat: run_ksat(ctx); break;
      case Command::kOgp: run_ogp(ctx); break;
    }
    manifest.outputs = writer.outputs();
    manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ofstream(staging / "manifest.json") << manifest.to_json().dump(2) << '\n';
  } catch (...) {
    fs::remove_all(staging);
    throw;
  }

  const fs::path old = sibling(out, ".old");
  fs::remove_all(old);
  if (fs::exists(out)) fs::rename(out, old);
  fs::create_directories(out.parent_path());
  fs::rename(staging, out);
  fs::remove_all(old);
  return manifest;
}

}  // namespace randopt::expcli
