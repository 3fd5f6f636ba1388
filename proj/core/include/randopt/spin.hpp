#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "randopt/error.hpp"
#include "randopt/instances.hpp"
#include "randopt/rng.hpp"

namespace randopt {

/// Spins in {-1, +1}.
using SpinConfig = std::vector<std::int8_t>;

bool is_spin_config(std::span<const std::int8_t> sigma) noexcept;

/// n^{-(p+1)/2} * sum over increasing tuples of J * sigma_i1 ... sigma_ip.
double energy(const GaussianTensor& couplings, std::span<const std::int8_t> sigma);

/// Multilinear extension of `energy` on [-1, 1]^n.
double multilinear_energy(const GaussianTensor& couplings, std::span<const double> x);
std::vector<double> energy_gradient(const GaussianTensor& couplings, std::span<const double> x);

/// Energy change when spin i alone is flipped.
double flip_delta(const GaussianTensor& couplings, std::span<const std::int8_t> sigma, std::uint32_t i);

/// n^{-1} <a, b>.
double overlap(std::span<const std::int8_t> a, std::span<const std::int8_t> b);
std::size_t hamming_distance(std::span<const std::int8_t> a, std::span<const std::int8_t> b);

struct GroundState {
  SpinConfig config;
  double energy = 0.0;
};

struct BruteForceOptions {
  std::uint32_t max_n_quadratic = 24;
  std::uint32_t max_n_general = 18;
  bool allow_over_cap = false;
};

/// Exhaustive Gray-code walk over {-1, 1}^n with incremental local fields.
/// Visits every configuration as a bit mask (bit i set <=> sigma_i = -1) with
/// its incrementally tracked energy. With `half` set, sigma_0 stays +1.
void for_each_configuration(const GaussianTensor& couplings, bool half,
                            const std::function<void(std::uint64_t mask, double energy)>& visit);

SpinConfig config_from_mask(std::uint64_t mask, std::uint32_t n);

/// Global maximum of `energy`. For even p the representative with sigma_0 = +1
/// is returned. The reported value is recomputed exactly by `energy`.
GroundState brute_force_ground_state(const GaussianTensor& couplings, const BruteForceOptions& options = {});

/// Inverse-temperature schedule, linear in the sweep index.
struct BetaSchedule {
  double beta_start = 0.0;
  double beta_end = 0.0;

  static BetaSchedule constant(double beta) { return {beta, beta}; }
  double at(std::size_t sweep, std::size_t sweeps) const noexcept;
};

struct ChainOptions {
  std::optional<SpinConfig> initial;
  /// Records visit counts for all 2^n states after every proposal (n <= 16).
  bool record_state_histogram = false;
};

struct ChainSummary {
  SpinConfig best;
  double best_energy = 0.0;
  SpinConfig final_config;
  std::vector<double> energy_trace;  // energy after each sweep
  double acceptance_rate = 0.0;
  std::vector<std::uint64_t> state_histogram;
};

/// Probability of accepting a single-spin flip that changes the energy by
/// `delta` under the weight exp(beta * n * energy).
double metropolis_accept_probability(double beta, std::uint32_t n, double delta) noexcept;

/// Random-scan single-spin Metropolis; one sweep = n proposals.
ChainSummary metropolis_chain(const GaussianTensor& couplings, const BetaSchedule& schedule, std::size_t sweeps,
                              RngStream& rng, const ChainOptions& options = {});

struct WalkOptions {
  double delta = 0.05;
  /// Orthogonalize against every previous step instead of only the last one.
  bool full_history = false;
  bool record_steps = false;
  std::size_t max_steps = 1'000'000;
};

struct WalkRecord {
  std::size_t step = 0;
  double energy = 0.0;
  std::uint32_t frozen = 0;
  bool rounding = false;  // coordinate-wise sign rounding after the walk proper
};

/// Interior point of the cube with its trajectory metadata.
struct RelaxedConfig {
  std::vector<double> point;
  std::size_t steps = 0;
  double step_size = 0.0;
};

struct WalkResult {
  SpinConfig config;
  double energy = 0.0;
  RelaxedConfig relaxed;
  std::vector<WalkRecord> trace;
  std::vector<std::vector<double>> steps;  // only with record_steps
  std::size_t random_restarts = 0;
};

class StalledWalkError : public Error {
 public:
  StalledWalkError(const std::string& what, WalkResult partial) : Error(what), partial_(std::move(partial)) {}
  const WalkResult& partial() const noexcept { return partial_; }

 private:
  WalkResult partial_;
};

/// Incremental walk from the centre of the cube: each step moves along the
/// gradient component orthogonal to the previous step, coordinates freeze on
/// reaching the boundary, and the final point is sign-rounded.
WalkResult guided_walk(const GaussianTensor& couplings, RngStream& rng, const WalkOptions& options = {});

/// CSV with columns step,energy,frozen_count.
void write_walk_trace_csv(std::ostream& out, const std::vector<WalkRecord>& trace);
void write_energy_trace_csv(std::ostream& out, const std::vector<double>& trace);

}  // namespace randopt
