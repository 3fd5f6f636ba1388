#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "randopt/instances.hpp"
#include "randopt/rng.hpp"

namespace randopt {

/// Boolean values x_1..x_n stored at indices 0..n-1 as 0/1.
using Assignment = std::vector<std::uint8_t>;

/// Number of clauses satisfied by `a`.
std::size_t eval_clauses(const KSatFormula& formula, std::span<const std::uint8_t> a);
inline bool satisfies(const KSatFormula& formula, std::span<const std::uint8_t> a) {
  return eval_clauses(formula, a) == formula.m();
}

enum class SatStatus { kSat, kUnsat };

struct DpllOptions {
  std::uint64_t node_budget = 50'000'000;
  bool pure_literals = true;
};

struct DpllResult {
  SatStatus status = SatStatus::kUnsat;
  Assignment assignment;  // verified witness when kSat
  std::uint64_t nodes = 0;
};

/// Complete search with unit propagation and pure-literal elimination.
/// Branches on the most frequent variable of the shortest open clauses
/// (ties to the lowest index). Throws BudgetError when the node budget runs out.
DpllResult dpll_solve(const KSatFormula& formula, const DpllOptions& options = {});

struct WalkSatOptions {
  std::uint64_t max_flips = 100'000;
  double noise = 0.5;
};

struct WalkSatResult {
  bool found = false;
  Assignment assignment;
  std::uint64_t flips = 0;
};

/// Random-restart-free WalkSAT: pick an unsatisfied clause, then flip a random
/// literal of it with probability `noise`, otherwise the literal breaking the
/// fewest satisfied clauses.
WalkSatResult walksat(const KSatFormula& formula, RngStream& rng, const WalkSatOptions& options = {});

struct EnumerateOptions {
  std::uint32_t max_n = 30;
  std::uint64_t max_solutions = std::uint64_t{1} << 26;
};

/// Every satisfying assignment, in increasing order of the bit mask
/// sum_i x_i 2^i. Search uses unit propagation to prune.
std::vector<Assignment> enumerate_solutions(const KSatFormula& formula, const EnumerateOptions& options = {});
std::uint64_t assignment_mask(std::span<const std::uint8_t> a);

/// log E[#solutions] = n log 2 + m log(1 - 2^-K), m = round(c n).
struct SatMomentPoint {
  double density;
  double log_expected_solutions;
};
std::vector<SatMomentPoint> sat_moment_curve(std::uint32_t n, std::uint32_t k, std::span<const double> densities);
/// Density where the expected solution count equals one: ln 2 / -ln(1 - 2^-K).
double first_moment_density(std::uint32_t k);

enum class SatSolver { kDpll, kWalkSat };

struct SatCurvePoint {
  double density = 0.0;
  std::size_t trials = 0;
  std::size_t satisfied = 0;
  std::size_t undecided = 0;  // budget exhausted or WalkSAT gave up
  double sat_fraction = 0.0;
  double mean_work = 0.0;     // DPLL nodes or WalkSAT flips
};

struct SatCurveOptions {
  std::uint32_t n = 150;
  std::uint32_t k = 3;
  std::size_t trials = 100;
  SatSolver solver = SatSolver::kDpll;
  DpllOptions dpll;
  WalkSatOptions walk;
  unsigned jobs = 1;
};

/// Satisfiable fraction over `trials` random formulas per density, m = round(c n).
/// Instance (d, t) uses stream `<label>/d<d>/t<t>`; results do not depend on `jobs`.
std::vector<SatCurvePoint> sat_curve(std::span<const double> densities, const SatCurveOptions& options,
                                     const RngStream& root);

/// Density where sat_fraction first drops through 1/2, by linear interpolation.
std::optional<double> half_crossing(std::span<const SatCurvePoint> curve);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};
/// Least-squares fit of sat_fraction against density.
SlopeFit fit_sat_slope(std::span<const SatCurvePoint> curve);

/// CSV with columns density,trials,sat_fraction.
void write_sat_curve_csv(std::ostream& out, std::span<const SatCurvePoint> curve);

}  // namespace randopt
