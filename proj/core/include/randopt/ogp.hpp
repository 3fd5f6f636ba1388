#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "randopt/graphopt.hpp"
#include "randopt/instances.hpp"
#include "randopt/interpolation.hpp"
#include "randopt/rng.hpp"
#include "randopt/spin.hpp"

namespace randopt {

/// An instance together with the objective read off it. Configurations are
/// +-1 vectors throughout: for graphs sigma_i = +1 marks membership of vertex
/// i, for formulas sigma_i = +1 marks x_i = true.
struct Model {
  Instance instance;
  SubsetKind subset_kind = SubsetKind::kClique;  // graphs only

  std::uint32_t n() const;
  bool is_graph() const noexcept { return std::holds_alternative<ErGraph>(instance); }
};

/// H(sigma): spin energy; subset size (or -inf when the subset is not a
/// clique / independent set); fraction of satisfied clauses.
double objective(const Model& model, std::span<const std::int8_t> sigma);

SpinConfig subset_config(const VertexSubset& subset, std::uint32_t n);
SpinConfig assignment_config(std::span<const std::uint8_t> assignment);

enum class SamplerKind { kExhaustive, kAnnealed };
const char* sampler_name(SamplerKind kind) noexcept;

struct SamplerConfig {
  SamplerKind kind = SamplerKind::kExhaustive;
  /// Annealed: independent attempts; 0 means 4 * count.
  std::size_t max_attempts = 0;
  /// Spin models: Metropolis sweeps per attempt and final inverse temperature.
  std::size_t sweeps = 200;
  double beta = 3.0;
  /// K-SAT: WalkSAT flip budget per attempt.
  std::uint64_t max_flips = 100'000;
  /// Exhaustive enumeration refuses larger spin / formula instances.
  std::uint32_t max_exhaustive_n = 24;
  /// Exhaustive enumeration refuses level sets larger than this.
  std::size_t max_solutions = std::size_t{1} << 22;
  unsigned jobs = 1;
};

struct NearOptimumSet {
  std::uint32_t n = 0;
  bool subset_encoding = false;  // graph models: overlaps use indicator vectors
  double level = 0.0;
  std::vector<SpinConfig> solutions;
  std::vector<double> values;  // H at admission
  SamplerKind sampler = SamplerKind::kExhaustive;
  bool budget_exhausted = false;  // fewer than `count` admitted (annealed)
  std::size_t attempts = 0;
  std::uint64_t seed = 0;
  std::string label;
  std::string instance_hash;
};

/// Exhaustive mode returns the complete level set {H >= level} (count is
/// ignored); annealed mode returns up to `count` admitted samples drawn from
/// independent restarts, in attempt order. Members are admitted only after
/// H is recomputed from scratch.
NearOptimumSet sample_near_optima(const Model& model, double level, std::size_t count, const SamplerConfig& config,
                                  RngStream& rng);

/// Members of the set whose H falls below the level on recomputation.
std::size_t admission_violations(const Model& model, const NearOptimumSet& set);

enum class OverlapMetric { kNormalizedHamming, kOverlap };
const char* metric_name(OverlapMetric metric) noexcept;

/// n^-1 <a, b> for spin configurations; |I cap J| / sqrt(|I| |J|) for subsets.
double pair_overlap(std::span<const std::int8_t> a, std::span<const std::int8_t> b, bool subset_encoding);
double pair_metric(std::span<const std::int8_t> a, std::span<const std::int8_t> b, bool subset_encoding,
                   OverlapMetric metric);

struct OverlapHistogram {
  OverlapMetric metric = OverlapMetric::kOverlap;
  std::vector<double> edges;   // bins + 1 entries
  std::vector<double> masses;  // bins entries, summing to 1
  std::size_t samples = 0;     // pairs behind the masses

  std::size_t bins() const noexcept { return masses.size(); }
};

/// Metric range: [-1, 1] for overlaps, [0, 1] for normalized Hamming.
std::pair<double, double> metric_range(OverlapMetric metric) noexcept;

OverlapHistogram histogram_from_values(std::span<const double> values, OverlapMetric metric, std::size_t bins);

/// Histogram over all unordered pairs, or `pair_cap` uniformly drawn pairs
/// when there are more.
OverlapHistogram overlap_histogram(const NearOptimumSet& set, OverlapMetric metric, std::size_t bins,
                                   std::size_t pair_cap = std::size_t{1} << 22);

struct GapOptions {
  double min_width = 0.05;    // in metric units
  double mass_ceiling = 1e-3;  // interior mass allowed
  double flank_mass = 0.05;    // total mass required on each side
};

struct GapReport {
  bool present = false;
  double nu1 = 0.0;
  double nu2 = 0.0;
  double mass_in_gap = 0.0;
  double min_width = 0.0;
  double mass_ceiling = 0.0;
};

/// Widest run of whole bins with interior mass <= ceiling, width >= min_width
/// and at least flank_mass on each side. Ties go to the smallest nu1.
GapReport detect_gap(const OverlapHistogram& hist, const GapOptions& options = {});

struct PlantedGap {
  OverlapHistogram histogram;
  double nu1 = 0.0;
  double nu2 = 0.0;
  std::size_t noise_samples = 0;
};

/// Normalized-Hamming histogram of `samples` draws: uniform on [0, nu1) and
/// [nu2, 1) in equal shares except for floor(noise_fraction * samples) draws
/// uniform inside the gap. Gap edges sit on bin edges.
PlantedGap planted_gap_histogram(RngStream& rng, double gap_width, double noise_fraction, std::size_t samples,
                                 std::size_t bins = 100);

struct ClusterReport {
  std::uint32_t radius = 1;
  std::size_t size_floor = 1;
  std::vector<std::size_t> labels;           // component id per solution, ids by first member
  std::vector<std::size_t> component_sizes;  // indexed by id
  std::optional<std::size_t> separation;     // min cross-component Hamming distance
  double separation_per_n = 0.0;
  double outlier_mass = 0.0;                 // fraction in components of size <= size_floor
};

/// Components of the graph joining solutions at Hamming distance <= radius.
ClusterReport cluster_solutions(std::span<const SpinConfig> solutions, std::uint32_t radius = 1,
                                std::size_t size_floor = 1);

struct MultiOverlapSample {
  std::size_t tuple = 0;
  std::vector<std::uint64_t> positions;  // l_1 <= ... <= l_M
  std::vector<double> overlaps;          // M x M, row-major
  std::vector<std::string> failures;     // positions where sampling failed

  std::size_t m() const noexcept { return positions.size(); }
  double at(std::size_t i, std::size_t j) const { return overlaps[i * positions.size() + j]; }
  bool complete() const noexcept { return failures.empty(); }
};

struct EndpointSummary {
  std::size_t pairs = 0;
  double mean_overlap = 0.0;
  double mean_distance = 0.0;  // normalized Hamming
  std::vector<double> overlaps;
  std::vector<double> distances;
};

struct InterpolationExperiment {
  std::vector<MultiOverlapSample> samples;
  std::optional<EndpointSummary> endpoint;
};

struct InterpolationOptions {
  std::size_t tuples = 1;
  /// Explicit positions (size M); empty means M evenly spaced from 0 to T.
  std::vector<std::uint64_t> positions;
  SubsetKind subset_kind = SubsetKind::kClique;
};

/// Samples one near-optimum per path position with a stream keyed by
/// (tuple, position) and records the pairwise overlap matrix.
InterpolationExperiment interpolation_overlap_experiment(const InterpolationPath& path, double level, std::size_t m,
                                                         const SamplerConfig& sampler, const RngStream& rng,
                                                         const InterpolationOptions& options = {});

struct StabilityProfile {
  std::vector<std::uint64_t> positions;
  std::vector<double> distances;  // normalized Hamming between consecutive outputs
  double max_distance = 0.0;
};

/// Runs greedy (clique or independent set) with one fixed seed on R_0,
/// R_stride, ... and records how far consecutive outputs move.
StabilityProfile greedy_stability_profile(const InterpolationPath& path, std::uint64_t stride, std::uint64_t seed,
                                          SubsetKind kind = SubsetKind::kClique);

nlohmann::json to_json(const NearOptimumSet& set);
nlohmann::json to_json(const OverlapHistogram& hist);
nlohmann::json to_json(const GapReport& gap);
nlohmann::json to_json(const ClusterReport& report);
nlohmann::json to_json(const MultiOverlapSample& sample);
nlohmann::json to_json(const StabilityProfile& profile);

/// CSV with columns lo,hi,mass.
void write_histogram_csv(std::ostream& out, const OverlapHistogram& hist);

}  // namespace randopt
