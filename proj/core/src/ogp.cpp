#include "randopt/ogp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "randopt/error.hpp"
#include "randopt/instance_io.hpp"
#include "randopt/ksat.hpp"
#include "randopt/parallel.hpp"

namespace randopt {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool admits(double value, double level) { return level == kNegInf || value >= level; }

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::vector<std::uint32_t> members_of(std::span<const std::int8_t> sigma) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t i = 0; i < sigma.size(); ++i)
    if (sigma[i] > 0) out.push_back(i);
  return out;
}

Assignment assignment_of(std::span<const std::int8_t> sigma) {
  Assignment a(sigma.size());
  for (std::size_t i = 0; i < sigma.size(); ++i) a[i] = sigma[i] > 0 ? 1 : 0;
  return a;
}

void check_config(const Model& model, std::span<const std::int8_t> sigma) {
  if (sigma.size() != model.n() || !is_spin_config(sigma))
    throw ParameterError("configuration must be a +-1 vector of length n");
}

// Cliques of the graph (or of its complement) with at least `min_size` members.
void enumerate_cliques(const ErGraph& g, std::size_t min_size, std::size_t cap, std::vector<SpinConfig>& out) {
  const std::uint32_t n = g.n();
  std::vector<std::uint32_t> current;
  auto emit = [&] {
    if (current.size() < min_size) return;
    if (out.size() >= cap) throw CapacityError("level set exceeds " + std::to_string(cap) + " members");
    SpinConfig s(n, -1);
    for (auto v : current) s[v] = 1;
    out.push_back(std::move(s));
  };
  // Candidates: later vertices adjacent to every member.
  std::function<void(const std::vector<std::uint32_t>&)> extend = [&](const std::vector<std::uint32_t>& cand) {
    emit();
    if (current.size() + cand.size() < min_size) return;
    for (std::size_t i = 0; i < cand.size(); ++i) {
      std::vector<std::uint32_t> next;
      for (std::size_t j = i + 1; j < cand.size(); ++j)
        if (g.has_edge(cand[i], cand[j])) next.push_back(cand[j]);
      current.push_back(cand[i]);
      extend(next);
      current.pop_back();
    }
  };
  std::vector<std::uint32_t> all(n);
  std::iota(all.begin(), all.end(), 0U);
  extend(all);
}

std::vector<SpinConfig> exhaustive_level_set(const Model& model, double level, const SamplerConfig& cfg) {
  const std::uint32_t n = model.n();
  std::vector<SpinConfig> out;
  auto all_configs = [&] {
    if (n > cfg.max_exhaustive_n || n > 40)
      throw CapacityError("exhaustive sampling limited to n <= " + std::to_string(cfg.max_exhaustive_n));
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      SpinConfig s = config_from_mask(mask, n);
      if (admits(objective(model, s), level)) {
        if (out.size() >= cfg.max_solutions)
          throw CapacityError("level set exceeds " + std::to_string(cfg.max_solutions) + " members");
        out.push_back(std::move(s));
      }
    }
  };
  std::visit(Overloaded{
                 [&](const GaussianTensor& j) {
                   if (n > cfg.max_exhaustive_n)
                     throw CapacityError("exhaustive sampling limited to n <= " +
                                         std::to_string(cfg.max_exhaustive_n));
                   const double slack = level == kNegInf ? 0.0 : 1e-9 * (1.0 + std::abs(level));
                   std::vector<std::uint64_t> masks;
                   for_each_configuration(j, false, [&](std::uint64_t mask, double e) {
                     if (level == kNegInf || e >= level - slack) masks.push_back(mask);
                   });
                   std::sort(masks.begin(), masks.end());
                   for (auto mask : masks) {
                     SpinConfig s = config_from_mask(mask, n);
                     if (!admits(energy(j, s), level)) continue;
                     if (out.size() >= cfg.max_solutions)
                       throw CapacityError("level set exceeds " + std::to_string(cfg.max_solutions) + " members");
                     out.push_back(std::move(s));
                   }
                 },
                 [&](const ErGraph& g) {
                   if (level == kNegInf) return all_configs();
                   const auto min_size = static_cast<std::size_t>(std::max(0.0, std::ceil(level)));
                   if (model.subset_kind == SubsetKind::kClique) {
                     enumerate_cliques(g, min_size, cfg.max_solutions, out);
                   } else {
                     enumerate_cliques(g.complement(), min_size, cfg.max_solutions, out);
                   }
                 },
                 [&](const KSatFormula& f) {
                   if (level > 1.0) return;
                   if (level < 1.0) return all_configs();
                   if (n > cfg.max_exhaustive_n)
                     throw CapacityError("exhaustive sampling limited to n <= " +
                                         std::to_string(cfg.max_exhaustive_n));
                   EnumerateOptions eo;
                   eo.max_n = cfg.max_exhaustive_n;
                   eo.max_solutions = cfg.max_solutions;
                   for (const auto& a : enumerate_solutions(f, eo)) out.push_back(assignment_config(a));
                 },
             },
             model.instance);
  return out;
}

SpinConfig local_ascent(const GaussianTensor& j, SpinConfig s) {
  bool improved = true;
  while (improved) {
    improved = false;
    for (std::uint32_t i = 0; i < j.n; ++i) {
      if (flip_delta(j, s, i) > 1e-15) {
        s[i] = static_cast<std::int8_t>(-s[i]);
        improved = true;
      }
    }
  }
  return s;
}

SpinConfig annealed_attempt(const Model& model, const SamplerConfig& cfg, RngStream& rng) {
  return std::visit(Overloaded{
                        [&](const GaussianTensor& j) {
                          const ChainSummary chain =
                              metropolis_chain(j, BetaSchedule{0.0, cfg.beta}, cfg.sweeps, rng);
                          return local_ascent(j, chain.best);
                        },
                        [&](const ErGraph& g) {
                          const VertexSubset s = model.subset_kind == SubsetKind::kClique
                                                     ? karp_greedy_clique(g, rng)
                                                     : greedy_independent_set(g, rng);
                          return subset_config(s, g.n());
                        },
                        [&](const KSatFormula& f) {
                          WalkSatOptions wo;
                          wo.max_flips = cfg.max_flips;
                          return assignment_config(walksat(f, rng, wo).assignment);
                        },
                    },
                    model.instance);
}

std::string model_hash(const Model& model) { return content_hash(model.instance); }

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

std::uint32_t Model::n() const {
  return std::visit(Overloaded{
                        [](const GaussianTensor& j) { return j.n; },
                        [](const ErGraph& g) { return g.n(); },
                        [](const KSatFormula& f) { return f.n; },
                    },
                    instance);
}

double objective(const Model& model, std::span<const std::int8_t> sigma) {
  check_config(model, sigma);
  return std::visit(Overloaded{
                        [&](const GaussianTensor& j) { return energy(j, sigma); },
                        [&](const ErGraph& g) {
                          const VertexSubset s{members_of(sigma), model.subset_kind};
                          return verify_subset(g, s) ? static_cast<double>(s.size()) : kNegInf;
                        },
                        [&](const KSatFormula& f) {
                          if (f.m() == 0) return 1.0;
                          const Assignment a = assignment_of(sigma);
                          return static_cast<double>(eval_clauses(f, a)) / static_cast<double>(f.m());
                        },
                    },
                    model.instance);
}

SpinConfig subset_config(const VertexSubset& subset, std::uint32_t n) {
  SpinConfig s(n, -1);
  for (auto v : subset.members) {
    if (v >= n) throw ParameterError("subset member out of range");
    s[v] = 1;
  }
  return s;
}

SpinConfig assignment_config(std::span<const std::uint8_t> assignment) {
  SpinConfig s(assignment.size());
  for (std::size_t i = 0; i < assignment.size(); ++i) s[i] = assignment[i] ? 1 : -1;
  return s;
}

const char* sampler_name(SamplerKind kind) noexcept {
  return kind == SamplerKind::kExhaustive ? "exhaustive" : "annealed";
}

NearOptimumSet sample_near_optima(const Model& model, double level, std::size_t count, const SamplerConfig& config,
                                  RngStream& rng) {
  if (std::isnan(level) || level == std::numeric_limits<double>::infinity())
    throw ParameterError("level must be finite or -inf");
  NearOptimumSet set;
  set.n = model.n();
  set.subset_encoding = model.is_graph();
  set.level = level;
  set.sampler = config.kind;
  set.seed = rng.seed();
  set.label = rng.label();
  set.instance_hash = model_hash(model);

  std::vector<SpinConfig> candidates;
  if (config.kind == SamplerKind::kExhaustive) {
    candidates = exhaustive_level_set(model, level, config);
    set.attempts = 1;
  } else {
    const std::size_t attempts = config.max_attempts != 0 ? config.max_attempts : 4 * count;
    std::vector<SpinConfig> drawn(attempts);
    parallel_for(attempts, config.jobs, [&](std::size_t a) {
      RngStream r = rng.child(a);
      drawn[a] = annealed_attempt(model, config, r);
    });
    set.attempts = attempts;
    for (std::size_t a = 0; a < attempts && candidates.size() < count; ++a)
      if (admits(objective(model, drawn[a]), level)) candidates.push_back(std::move(drawn[a]));
    set.budget_exhausted = candidates.size() < count;
  }
  // Admission: recompute H from scratch for every member.
  for (auto& s : candidates) {
    const double h = objective(model, s);
    if (!admits(h, level)) continue;
    set.values.push_back(h);
    set.solutions.push_back(std::move(s));
  }
  return set;
}

std::size_t admission_violations(const Model& model, const NearOptimumSet& set) {
  std::size_t bad = 0;
  for (const auto& s : set.solutions)
    if (!admits(objective(model, s), set.level)) ++bad;
  return bad;
}

const char* metric_name(OverlapMetric metric) noexcept {
  return metric == OverlapMetric::kOverlap ? "overlap" : "normalized_hamming";
}

double pair_overlap(std::span<const std::int8_t> a, std::span<const std::int8_t> b, bool subset_encoding) {
  if (a.size() != b.size() || a.empty()) throw ParameterError("configurations must have equal positive length");
  if (!subset_encoding) return overlap(a, b);
  std::size_t ia = 0, ib = 0, both = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ia += a[i] > 0;
    ib += b[i] > 0;
    both += a[i] > 0 && b[i] > 0;
  }
  if (ia == 0 || ib == 0) return ia == ib ? 1.0 : 0.0;
  return static_cast<double>(both) / std::sqrt(static_cast<double>(ia) * static_cast<double>(ib));
}

double pair_metric(std::span<const std::int8_t> a, std::span<const std::int8_t> b, bool subset_encoding,
                   OverlapMetric metric) {
  if (metric == OverlapMetric::kOverlap) return pair_overlap(a, b, subset_encoding);
  return static_cast<double>(hamming_distance(a, b)) / static_cast<double>(a.size());
}

std::pair<double, double> metric_range(OverlapMetric metric) noexcept {
  return metric == OverlapMetric::kOverlap ? std::pair{-1.0, 1.0} : std::pair{0.0, 1.0};
}

OverlapHistogram histogram_from_values(std::span<const double> values, OverlapMetric metric, std::size_t bins) {
  if (bins == 0) throw ParameterError("histogram needs at least one bin");
  if (values.empty()) throw InsufficientDataError("histogram needs at least one value");
  const auto [lo, hi] = metric_range(metric);
  OverlapHistogram h;
  h.metric = metric;
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  std::vector<std::size_t> counts(bins, 0);
  for (double v : values) {
    if (!(v >= lo - 1e-12 && v <= hi + 1e-12)) throw ParameterError("value outside the metric range");
    const double u = (v - lo) / (hi - lo) * static_cast<double>(bins);
    const auto idx = static_cast<std::size_t>(std::clamp(std::floor(u), 0.0, static_cast<double>(bins - 1)));
    ++counts[idx];
  }
  h.samples = values.size();
  h.masses.resize(bins);
  for (std::size_t i = 0; i < bins; ++i)
    h.masses[i] = static_cast<double>(counts[i]) / static_cast<double>(values.size());
  return h;
}

OverlapHistogram overlap_histogram(const NearOptimumSet& set, OverlapMetric metric, std::size_t bins,
                                   std::size_t pair_cap) {
  const std::size_t n = set.solutions.size();
  if (n < 2) throw InsufficientDataError("overlap histogram needs at least two solutions");
  const std::uint64_t pairs = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  std::vector<double> values;
  auto metric_of = [&](std::size_t i, std::size_t j) {
    return pair_metric(set.solutions[i], set.solutions[j], set.subset_encoding, metric);
  };
  if (pairs <= pair_cap) {
    values.reserve(pairs);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) values.push_back(metric_of(i, j));
  } else {
    RngStream rng(set.seed, set.label + "/pairs");
    values.reserve(pair_cap);
    for (std::size_t s = 0; s < pair_cap; ++s) {
      const auto i = static_cast<std::size_t>(rng.below(n));
      auto j = static_cast<std::size_t>(rng.below(n - 1));
      if (j >= i) ++j;
      values.push_back(metric_of(i, j));
    }
  }
  return histogram_from_values(values, metric, bins);
}

GapReport detect_gap(const OverlapHistogram& hist, const GapOptions& options) {
  GapReport rep;
  rep.min_width = options.min_width;
  rep.mass_ceiling = options.mass_ceiling;
  const std::size_t bins = hist.bins();
  if (bins == 0 || hist.edges.size() != bins + 1) return rep;
  std::vector<double> prefix(bins + 1, 0.0);
  for (std::size_t i = 0; i < bins; ++i) prefix[i + 1] = prefix[i] + hist.masses[i];
  const double total = prefix[bins];
  constexpr double kEps = 1e-12;
  double best_width = -1.0;
  for (std::size_t a = 1; a < bins; ++a) {
    if (prefix[a] < options.flank_mass - kEps) continue;
    // Largest b with interior mass within the ceiling and enough mass to the right.
    std::size_t best_b = bins;
    for (std::size_t b = a; b + 1 < bins; ++b) {
      if (prefix[b + 1] - prefix[a] > options.mass_ceiling + kEps) break;
      if (total - prefix[b + 1] < options.flank_mass - kEps) break;
      best_b = b;
    }
    if (best_b == bins) continue;
    const double width = hist.edges[best_b + 1] - hist.edges[a];
    if (width < options.min_width - 1e-9 || width <= best_width + kEps) continue;
    best_width = width;
    rep.present = true;
    rep.nu1 = hist.edges[a];
    rep.nu2 = hist.edges[best_b + 1];
    rep.mass_in_gap = prefix[best_b + 1] - prefix[a];
  }
  return rep;
}

PlantedGap planted_gap_histogram(RngStream& rng, double gap_width, double noise_fraction, std::size_t samples,
                                 std::size_t bins) {
  if (bins < 20) throw ParameterError("planted gaps need at least 20 bins");
  if (samples == 0) throw ParameterError("planted gaps need samples");
  const auto g = static_cast<std::size_t>(std::llround(gap_width * static_cast<double>(bins)));
  const std::size_t margin = bins / 10;
  if (g == 0 || g + 2 * margin > bins) throw ParameterError("gap width does not fit the histogram");
  const std::size_t start = margin + static_cast<std::size_t>(rng.below(bins - 2 * margin - g + 1));
  const auto noise = static_cast<std::size_t>(std::floor(noise_fraction * static_cast<double>(samples)));
  std::vector<std::size_t> counts(bins, 0);
  for (std::size_t s = 0; s < samples; ++s) {
    std::size_t bin;
    if (s < noise) {
      bin = start + static_cast<std::size_t>(rng.below(g));
    } else if (rng.bernoulli(0.5)) {
      bin = static_cast<std::size_t>(rng.below(start));
    } else {
      bin = start + g + static_cast<std::size_t>(rng.below(bins - start - g));
    }
    ++counts[bin];
  }
  PlantedGap out;
  out.histogram.metric = OverlapMetric::kNormalizedHamming;
  out.histogram.samples = samples;
  out.histogram.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) out.histogram.edges[i] = static_cast<double>(i) / static_cast<double>(bins);
  out.histogram.masses.resize(bins);
  for (std::size_t i = 0; i < bins; ++i)
    out.histogram.masses[i] = static_cast<double>(counts[i]) / static_cast<double>(samples);
  out.nu1 = out.histogram.edges[start];
  out.nu2 = out.histogram.edges[start + g];
  out.noise_samples = noise;
  return out;
}

ClusterReport cluster_solutions(std::span<const SpinConfig> solutions, std::uint32_t radius, std::size_t size_floor) {
  ClusterReport rep;
  rep.radius = radius;
  rep.size_floor = size_floor;
  const std::size_t count = solutions.size();
  if (count == 0) return rep;
  const std::size_t n = solutions[0].size();
  for (const auto& s : solutions)
    if (s.size() != n || !is_spin_config(s)) throw ParameterError("solutions must be +-1 vectors of equal length");

  const bool packed = n <= 64;
  std::vector<std::uint64_t> masks;
  if (packed) {
    masks.reserve(count);
    for (const auto& s : solutions) {
      std::uint64_t m = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (s[i] < 0) m |= std::uint64_t{1} << i;
      masks.push_back(m);
    }
  }
  auto distance = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (packed) return static_cast<std::size_t>(std::popcount(masks[i] ^ masks[j]));
    return hamming_distance(solutions[i], solutions[j]);
  };

  std::vector<std::size_t> parent(count);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto join = [&](std::size_t a, std::size_t b) {
    a = find_root(parent, a);
    b = find_root(parent, b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };
  if (packed && radius <= 1) {
    std::unordered_map<std::uint64_t, std::size_t> first;
    first.reserve(count * 2);
    for (std::size_t i = 0; i < count; ++i) {
      auto [it, inserted] = first.emplace(masks[i], i);
      if (!inserted) join(it->second, i);
    }
    if (radius == 1) {
      for (std::size_t i = 0; i < count; ++i)
        for (std::size_t b = 0; b < n; ++b) {
          auto it = first.find(masks[i] ^ (std::uint64_t{1} << b));
          if (it != first.end()) join(i, it->second);
        }
    }
  } else {
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t j = i + 1; j < count; ++j)
        if (distance(i, j) <= radius) join(i, j);
  }

  std::vector<std::size_t> id_of_root(count, count);
  rep.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t r = find_root(parent, i);
    if (id_of_root[r] == count) {
      id_of_root[r] = rep.component_sizes.size();
      rep.component_sizes.push_back(0);
    }
    rep.labels[i] = id_of_root[r];
    ++rep.component_sizes[rep.labels[i]];
  }
  if (rep.component_sizes.size() > 1) {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i < count && best > radius + 1; ++i)
      for (std::size_t j = i + 1; j < count; ++j) {
        if (rep.labels[i] == rep.labels[j]) continue;
        best = std::min(best, distance(i, j));
        if (best == radius + 1) break;
      }
    rep.separation = best;
    rep.separation_per_n = static_cast<double>(best) / static_cast<double>(n);
  }
  std::size_t outliers = 0;
  for (auto s : rep.component_sizes)
    if (s <= size_floor) outliers += s;
  rep.outlier_mass = static_cast<double>(outliers) / static_cast<double>(count);
  return rep;
}

InterpolationExperiment interpolation_overlap_experiment(const InterpolationPath& path, double level, std::size_t m,
                                                         const SamplerConfig& sampler, const RngStream& rng,
                                                         const InterpolationOptions& options) {
  if (m < 2) throw ParameterError("tuple size M must be at least 2");
  const std::uint64_t T = path.length();
  std::vector<std::uint64_t> positions = options.positions;
  if (positions.empty()) {
    for (std::size_t i = 0; i < m; ++i)
      positions.push_back(static_cast<std::uint64_t>(
          std::llround(static_cast<double>(T) * static_cast<double>(i) / static_cast<double>(m - 1))));
  }
  if (positions.size() != m) throw ParameterError("explicit positions must have M entries");
  for (std::size_t i = 0; i < m; ++i) {
    if (positions[i] > T) throw ParameterError("path position beyond the path length");
    if (i > 0 && positions[i] < positions[i - 1]) throw ParameterError("path positions must be nondecreasing");
  }

  std::vector<Model> models;
  models.reserve(m);
  for (auto l : positions) models.push_back(Model{path.instance_at(l), options.subset_kind});

  InterpolationExperiment out;
  out.samples.resize(options.tuples);
  std::vector<double> pair_distance(options.tuples, std::numeric_limits<double>::quiet_NaN());
  parallel_for(options.tuples, sampler.jobs, [&](std::size_t r) {
    SamplerConfig inner = sampler;
    inner.jobs = 1;
    MultiOverlapSample& s = out.samples[r];
    s.tuple = r;
    s.positions = positions;
    std::vector<std::optional<SpinConfig>> picked(m);
    for (std::size_t i = 0; i < m; ++i) {
      RngStream stream = rng.child("t" + std::to_string(r)).child(positions[i]);
      NearOptimumSet set = sample_near_optima(models[i], level, 1, inner, stream);
      if (set.solutions.empty()) {
        s.failures.push_back("position " + std::to_string(positions[i]) + ": level not reached");
        continue;
      }
      const std::size_t pick = set.solutions.size() == 1 ? 0 : static_cast<std::size_t>(stream.below(set.solutions.size()));
      picked[i] = std::move(set.solutions[pick]);
    }
    const bool subset = models[0].is_graph();
    s.overlaps.assign(m * m, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (picked[i] && picked[j]) s.overlaps[i * m + j] = i == j ? 1.0 : pair_overlap(*picked[i], *picked[j], subset);
    if (picked[0] && picked[m - 1])
      pair_distance[r] = pair_metric(*picked[0], *picked[m - 1], subset, OverlapMetric::kNormalizedHamming);
  });

  if (m == 2 && positions[0] == 0 && positions[1] == T) {
    EndpointSummary e;
    for (std::size_t r = 0; r < out.samples.size(); ++r) {
      if (!out.samples[r].complete()) continue;
      e.overlaps.push_back(out.samples[r].at(0, 1));
      e.distances.push_back(pair_distance[r]);
      e.mean_overlap += e.overlaps.back();
      e.mean_distance += e.distances.back();
      ++e.pairs;
    }
    if (e.pairs > 0) {
      e.mean_overlap /= static_cast<double>(e.pairs);
      e.mean_distance /= static_cast<double>(e.pairs);
    }
    out.endpoint = std::move(e);
  }
  return out;
}

StabilityProfile greedy_stability_profile(const InterpolationPath& path, std::uint64_t stride, std::uint64_t seed,
                                          SubsetKind kind) {
  if (!std::holds_alternative<ErGraph>(path.base())) throw ParameterError("stability profile needs a graph path");
  StabilityProfile prof;
  std::optional<SpinConfig> prev;
  path.for_each_instance(stride, [&](std::uint64_t t, const Instance& inst) {
    const auto& g = std::get<ErGraph>(inst);
    RngStream rng(seed, "stability");
    const VertexSubset s = kind == SubsetKind::kClique ? karp_greedy_clique(g, rng) : greedy_independent_set(g, rng);
    SpinConfig cur = subset_config(s, g.n());
    if (prev) {
      const double d = static_cast<double>(hamming_distance(*prev, cur)) / static_cast<double>(g.n());
      prof.positions.push_back(t);
      prof.distances.push_back(d);
      prof.max_distance = std::max(prof.max_distance, d);
    }
    prev = std::move(cur);
  });
  return prof;
}

nlohmann::json to_json(const NearOptimumSet& set) {
  nlohmann::json sols = nlohmann::json::array();
  for (const auto& s : set.solutions) {
    std::string bits(s.size(), '0');
    for (std::size_t i = 0; i < s.size(); ++i) bits[i] = s[i] > 0 ? '1' : '0';
    sols.push_back(bits);
  }
  nlohmann::json level = nullptr;
  if (std::isfinite(set.level)) level = set.level;
  return {{"n", set.n},
          {"level", level},
          {"sampler", sampler_name(set.sampler)},
          {"budget_exhausted", set.budget_exhausted},
          {"attempts", set.attempts},
          {"seed", set.seed},
          {"label", set.label},
          {"instance_hash", set.instance_hash},
          {"values", set.values},
          {"solutions", sols}};
}

nlohmann::json to_json(const OverlapHistogram& hist) {
  return {{"metric", metric_name(hist.metric)}, {"edges", hist.edges}, {"masses", hist.masses}, {"samples", hist.samples}};
}

nlohmann::json to_json(const GapReport& gap) {
  return {{"present", gap.present},  {"nu1", gap.nu1},           {"nu2", gap.nu2},
          {"mass_in_gap", gap.mass_in_gap}, {"min_width", gap.min_width}, {"mass_ceiling", gap.mass_ceiling}};
}

nlohmann::json to_json(const ClusterReport& report) {
  nlohmann::json sep = nullptr;
  if (report.separation) sep = *report.separation;
  return {{"radius", report.radius},
          {"size_floor", report.size_floor},
          {"components", report.component_sizes},
          {"separation", sep},
          {"separation_per_n", report.separation_per_n},
          {"outlier_mass", report.outlier_mass}};
}

nlohmann::json to_json(const MultiOverlapSample& sample) {
  nlohmann::json rows = nlohmann::json::array();
  const std::size_t m = sample.m();
  for (std::size_t i = 0; i < m; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < m; ++j) {
      const double v = sample.at(i, j);
      row.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
    }
    rows.push_back(row);
  }
  return {{"tuple", sample.tuple}, {"positions", sample.positions}, {"overlaps", rows}, {"failures", sample.failures}};
}

nlohmann::json to_json(const StabilityProfile& profile) {
  return {{"positions", profile.positions}, {"distances", profile.distances}, {"max_distance", profile.max_distance}};
}

void write_histogram_csv(std::ostream& out, const OverlapHistogram& hist) {
  out << "lo,hi,mass\r\n";
  char buf[128];
  for (std::size_t i = 0; i < hist.bins(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\r\n", hist.edges[i], hist.edges[i + 1], hist.masses[i]);
    out << buf;
  }
}

}  // namespace randopt
