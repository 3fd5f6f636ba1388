#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "randopt/error.hpp"
#include "randopt/ksat.hpp"
#include "randopt/ogp.hpp"

using namespace randopt;

namespace {

NearOptimumSet explicit_set(std::vector<SpinConfig> configs) {
  NearOptimumSet s;
  s.n = static_cast<std::uint32_t>(configs.front().size());
  s.solutions = std::move(configs);
  s.values.assign(s.solutions.size(), 0.0);
  return s;
}

OverlapHistogram masses_at(std::vector<double> masses) {
  OverlapHistogram h;
  h.metric = OverlapMetric::kNormalizedHamming;
  const std::size_t b = masses.size();
  for (std::size_t i = 0; i <= b; ++i) h.edges.push_back(static_cast<double>(i) / static_cast<double>(b));
  h.masses = std::move(masses);
  h.samples = 1000;
  return h;
}

}  // namespace

TEST_CASE("vacuous level admits every sample") {
  RngStream r(1, "vacuous");
  const Model m{gen_gaussian_tensor(30, 2, r)};
  SamplerConfig cfg;
  cfg.kind = SamplerKind::kAnnealed;
  cfg.sweeps = 5;
  const NearOptimumSet set = sample_near_optima(m, -INFINITY, 10, cfg, r);
  CHECK(set.solutions.size() == 10);
  CHECK_FALSE(set.budget_exhausted);
}

TEST_CASE("exhaustive level set at the ground state is the flip pair") {
  RngStream r(2, "gs-pair");
  const GaussianTensor j = gen_gaussian_tensor(14, 2, r);
  const GroundState gs = brute_force_ground_state(j);
  const NearOptimumSet set = sample_near_optima(Model{j}, gs.energy, 0, SamplerConfig{}, r);
  REQUIRE(set.solutions.size() == 2);
  SpinConfig neg = gs.config;
  for (auto& v : neg) v = static_cast<std::int8_t>(-v);
  CHECK(std::find(set.solutions.begin(), set.solutions.end(), gs.config) != set.solutions.end());
  CHECK(std::find(set.solutions.begin(), set.solutions.end(), neg) != set.solutions.end());
  CHECK(admission_violations(Model{j}, set) == 0);
}

TEST_CASE("exhaustive level sets match brute force for every model kind") {
  RngStream r(3, "exhaustive");
  const GaussianTensor j = gen_gaussian_tensor(10, 3, r);
  std::vector<double> all;
  for (std::uint64_t m = 0; m < 1024; ++m) all.push_back(energy(j, config_from_mask(m, 10)));
  std::sort(all.rbegin(), all.rend());
  const double level = all[40];
  const NearOptimumSet spin = sample_near_optima(Model{j}, level, 0, SamplerConfig{}, r);
  CHECK(spin.solutions.size() == static_cast<std::size_t>(std::count_if(all.begin(), all.end(), [&](double e) {
          return e >= level;
        })));

  const ErGraph g = gen_er_graph(14, 0.5, r);
  const Model cliques{g, SubsetKind::kClique};
  std::size_t expect = 0;
  for (std::uint64_t m = 0; m < (1U << 14); ++m) {
    VertexSubset s{{}, SubsetKind::kClique};
    for (std::uint32_t i = 0; i < 14; ++i)
      if ((m >> i) & 1U) s.members.push_back(i);
    expect += s.size() >= 3 && verify_subset(g, s);
  }
  const NearOptimumSet cl = sample_near_optima(cliques, 3.0, 0, SamplerConfig{}, r);
  CHECK(cl.solutions.size() == expect);
  CHECK(admission_violations(cliques, cl) == 0);

  const KSatFormula f = gen_ksat(12, 40, 3, r);
  const NearOptimumSet sat = sample_near_optima(Model{f}, 1.0, 0, SamplerConfig{}, r);
  CHECK(sat.solutions.size() == enumerate_solutions(f).size());
}

TEST_CASE("annealed sampler respects admission and reports exhausted budgets") {
  RngStream r(4, "annealed");
  const GaussianTensor j = gen_gaussian_tensor(40, 2, r);
  SamplerConfig cfg;
  cfg.kind = SamplerKind::kAnnealed;
  cfg.sweeps = 50;
  const Model m{j};
  const NearOptimumSet set = sample_near_optima(m, 0.5, 8, cfg, r);
  CHECK(admission_violations(m, set) == 0);
  for (double v : set.values) CHECK(v >= 0.5);
  const NearOptimumSet none = sample_near_optima(m, 100.0, 4, cfg, r);
  CHECK(none.solutions.empty());
  CHECK(none.budget_exhausted);
}

TEST_CASE("annealed sampling does not depend on jobs") {
  RngStream g(5, "jobs");
  const Model m{gen_er_graph(60, 0.5, g), SubsetKind::kClique};
  SamplerConfig cfg;
  cfg.kind = SamplerKind::kAnnealed;
  RngStream a(5, "s"), b(5, "s");
  const NearOptimumSet one = sample_near_optima(m, 5.0, 12, cfg, a);
  cfg.jobs = 4;
  const NearOptimumSet four = sample_near_optima(m, 5.0, 12, cfg, b);
  CHECK(one.solutions == four.solutions);
}

TEST_CASE("histogram edge cases") {
  SpinConfig s = {1, -1, 1, 1, -1};
  SpinConfig neg = s;
  for (auto& v : neg) v = static_cast<std::int8_t>(-v);
  const OverlapHistogram same = overlap_histogram(explicit_set({s, s}), OverlapMetric::kOverlap, 20);
  CHECK(same.masses.back() == 1.0);
  const OverlapHistogram flip = overlap_histogram(explicit_set({s, neg}), OverlapMetric::kOverlap, 20);
  CHECK(flip.masses.front() == 1.0);
  CHECK_THROWS_AS(overlap_histogram(explicit_set({s}), OverlapMetric::kOverlap, 20), InsufficientDataError);
}

TEST_CASE("histogram masses are normalized over the metric range") {
  RngStream r(6, "norm");
  std::vector<SpinConfig> configs;
  for (int i = 0; i < 60; ++i) {
    SpinConfig c(25);
    for (auto& v : c) v = r.bernoulli(0.5) ? 1 : -1;
    configs.push_back(c);
  }
  for (auto metric : {OverlapMetric::kOverlap, OverlapMetric::kNormalizedHamming}) {
    const OverlapHistogram h = overlap_histogram(explicit_set(configs), metric, 37);
    CHECK(std::abs(std::accumulate(h.masses.begin(), h.masses.end(), 0.0) - 1.0) <= 1e-12);
    CHECK(h.edges.front() == metric_range(metric).first);
    CHECK(h.edges.back() == metric_range(metric).second);
    CHECK(h.samples == 60 * 59 / 2);
  }
  const OverlapHistogram capped = overlap_histogram(explicit_set(configs), OverlapMetric::kOverlap, 10, 100);
  CHECK(capped.samples == 100);
}

TEST_CASE("five-cycle independent sets of size two") {
  ErGraph c5(5, 0.5);
  for (std::uint32_t i = 0; i < 5; ++i) c5.set_edge(i, (i + 1) % 5, true);
  RngStream r(7, "c5");
  const NearOptimumSet set = sample_near_optima(Model{c5, SubsetKind::kIndependentSet}, 2.0, 0, SamplerConfig{}, r);
  REQUIRE(set.solutions.size() == 5);
  // Non-adjacent pairs {i, i+2}; two such sets share a vertex or are disjoint.
  std::size_t share = 0, disjoint = 0;
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = a + 1; b < 5; ++b) {
      const double d = pair_metric(set.solutions[a], set.solutions[b], true, OverlapMetric::kNormalizedHamming);
      if (std::abs(d - 2.0 / 5.0) < 1e-12) ++share;
      else if (std::abs(d - 4.0 / 5.0) < 1e-12) ++disjoint;
    }
  CHECK(share == 5);
  CHECK(disjoint == 5);
}

TEST_CASE("gap detection on constructed histograms") {
  std::vector<double> m(10, 0.0);
  m[1] = 0.5;
  m[8] = 0.5;
  const GapReport bimodal = detect_gap(masses_at(m));
  REQUIRE(bimodal.present);
  CHECK(bimodal.nu1 <= 0.2);
  CHECK(bimodal.nu2 >= 0.8);
  CHECK(bimodal.nu1 < bimodal.nu2);
  CHECK_FALSE(detect_gap(masses_at(std::vector<double>(50, 0.02))).present);
}

TEST_CASE("raising the ceiling never removes a gap") {
  RngStream r(8, "mono");
  for (int s = 0; s < 200; ++s) {
    std::vector<double> m(40);
    double tot = 0.0;
    for (auto& v : m) {
      v = r.bernoulli(0.4) ? 0.0 : r.uniform() * r.uniform();
      tot += v;
    }
    if (tot == 0.0) continue;
    for (auto& v : m) v /= tot;
    const OverlapHistogram h = masses_at(m);
    bool was = false;
    for (double c : {0.0, 1e-4, 1e-3, 1e-2, 0.05, 0.1}) {
      const bool now = detect_gap(h, {0.05, c, 0.05}).present;
      CHECK((now || !was));
      was = now;
    }
  }
}

TEST_CASE("planted gaps are recovered") {
  const RngStream root(9, "planted");
  int correct = 0, total = 0;
  for (int s = 0; s < 100; ++s) {
    RngStream r = root.child(s);
    const double width = 0.05 + 0.35 * r.uniform();
    const double noise = 1e-3 * r.uniform();
    const PlantedGap pg = planted_gap_histogram(r, width, noise, 20000);
    const GapReport rep = detect_gap(pg.histogram);
    ++total;
    if (rep.present && std::abs(rep.nu1 - pg.nu1) < 1e-9 && std::abs(rep.nu2 - pg.nu2) < 1e-9) ++correct;
  }
  CHECK(correct >= 95 * total / 100);
}

TEST_CASE("clustering small named cases") {
  // (x1 or x2): 10, 01, 11
  const std::vector<SpinConfig> sols = {{1, -1}, {-1, 1}, {1, 1}};
  const ClusterReport one = cluster_solutions(sols, 1);
  CHECK(one.component_sizes == std::vector<std::size_t>{3});
  CHECK_FALSE(one.separation.has_value());

  const std::vector<SpinConfig> far = {{1, 1, 1, 1, 1, 1}, {-1, -1, -1, -1, -1, -1}};
  const ClusterReport two = cluster_solutions(far, 1);
  CHECK(two.component_sizes == std::vector<std::size_t>{1, 1});
  REQUIRE(two.separation.has_value());
  CHECK(*two.separation == 6);
  CHECK(two.separation_per_n == 1.0);
  CHECK(two.outlier_mass == 1.0);
  CHECK(cluster_solutions(std::vector<SpinConfig>{}).component_sizes.empty());
}

TEST_CASE("clustering agrees with a BFS oracle") {
  const RngStream root(10, "bfs");
  for (int s = 0; s < 100; ++s) {
    RngStream r = root.child(s);
    const auto n = static_cast<std::uint32_t>(6 + r.below(11));
    const KSatFormula f = gen_ksat(n, static_cast<std::size_t>(std::lround((2.0 + 2.5 * r.uniform()) * n)), 3, r);
    std::vector<SpinConfig> sols;
    for (const auto& a : enumerate_solutions(f)) sols.push_back(assignment_config(a));
    if (sols.size() > 3000) sols.resize(3000);
    const std::uint32_t radius = 1 + static_cast<std::uint32_t>(s % 2);
    const ClusterReport rep = cluster_solutions(sols, radius);
    const auto oracle = oracles::bfs_labels(sols, radius);
    REQUIRE(rep.labels.size() == oracle.size());
    CHECK(rep.labels == oracle);
    CHECK(std::accumulate(rep.component_sizes.begin(), rep.component_sizes.end(), std::size_t{0}) == sols.size());
    if (rep.separation) CHECK(*rep.separation > radius);
  }
}

TEST_CASE("interpolation experiment matrices") {
  RngStream g(11, "interp");
  const InterpolationPath path(gen_er_graph(40, 0.5, g), RngStream(11, "interp/path"));
  SamplerConfig cfg;
  cfg.kind = SamplerKind::kAnnealed;
  InterpolationOptions opts;
  opts.tuples = 3;
  const auto exp = interpolation_overlap_experiment(path, 4.0, 3, cfg, RngStream(11, "interp/samples"), opts);
  REQUIRE(exp.samples.size() == 3);
  for (const auto& s : exp.samples) {
    REQUIRE(s.complete());
    for (std::size_t a = 0; a < 3; ++a) {
      CHECK(s.at(a, a) == 1.0);
      for (std::size_t b = 0; b < 3; ++b) {
        CHECK(s.at(a, b) == s.at(b, a));
        CHECK(std::abs(s.at(a, b)) <= 1.0);
      }
    }
  }
  opts.positions = {0, 0};
  opts.tuples = 1;
  const auto same = interpolation_overlap_experiment(path, 4.0, 2, cfg, RngStream(11, "interp/zero"), opts);
  CHECK(same.samples[0].at(0, 1) == 1.0);
  CHECK_THROWS_AS(interpolation_overlap_experiment(path, 4.0, 1, cfg, RngStream(11, "x")), ParameterError);
}

TEST_CASE("unreachable level is annotated rather than thrown") {
  RngStream g(12, "fail");
  const InterpolationPath path(gen_er_graph(30, 0.5, g), RngStream(12, "fail/path"));
  SamplerConfig cfg;
  cfg.kind = SamplerKind::kAnnealed;
  cfg.max_attempts = 4;
  const auto exp = interpolation_overlap_experiment(path, 25.0, 2, cfg, RngStream(12, "fail/s"));
  REQUIRE(exp.samples.size() == 1);
  CHECK_FALSE(exp.samples[0].complete());
}

TEST_CASE("greedy stability profile") {
  RngStream g(13, "stab");
  const InterpolationPath path(gen_er_graph(50, 0.5, g), RngStream(13, "stab/path"));
  const StabilityProfile prof = greedy_stability_profile(path, 25, 99);
  CHECK(prof.positions.front() == 25);
  CHECK(prof.positions.back() == path.length());
  CHECK(prof.distances.size() == prof.positions.size());
  CHECK(prof.max_distance == *std::max_element(prof.distances.begin(), prof.distances.end()));
}

TEST_CASE("independent endpoints carry near-zero overlap") {
  RngStream g(14, "endpoints");
  const InterpolationPath path(gen_er_graph(200, 0.5, g), RngStream(14, "endpoints/path"));
  SamplerConfig cfg;
  cfg.kind = SamplerKind::kAnnealed;
  cfg.max_attempts = 32;
  InterpolationOptions opts;
  opts.tuples = 100;
  opts.positions = {0, path.length()};
  const double level = std::floor(std::log2(200.0));
  const auto exp = interpolation_overlap_experiment(path, level, 2, cfg, RngStream(14, "endpoints/s"), opts);
  REQUIRE(exp.endpoint.has_value());
  CHECK(exp.endpoint->pairs == 100);
  CHECK(std::abs(exp.endpoint->mean_overlap) <= 0.1);
}
