#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "randopt/instances.hpp"
#include "randopt/rng.hpp"

namespace randopt {

enum class SubsetKind { kClique, kIndependentSet };

/// Sorted vertex set claimed to be a clique or independent set.
struct VertexSubset {
  std::vector<std::uint32_t> members;
  SubsetKind kind = SubsetKind::kClique;

  std::size_t size() const noexcept { return members.size(); }
};

/// True when members are distinct, in range and satisfy the kind's property.
bool verify_subset(const ErGraph& graph, const VertexSubset& subset);
/// True when no outside vertex can be added without breaking the property.
bool is_maximal(const ErGraph& graph, const VertexSubset& subset);

/// Single pass over `order`, keeping each vertex compatible with all kept ones.
VertexSubset greedy_scan(const ErGraph& graph, SubsetKind kind, std::span<const std::uint32_t> order);

/// Karp's greedy clique: a seeded uniform scan order, or 0..n-1 when
/// `fixed_order` is set.
VertexSubset karp_greedy_clique(const ErGraph& graph, RngStream& rng, bool fixed_order = false);
VertexSubset greedy_independent_set(const ErGraph& graph, RngStream& rng, bool fixed_order = false);

struct ExactOptions {
  std::uint32_t max_vertices = 80;
  bool allow_over_cap = false;
};

/// Maximum clique by branch and bound with greedy-colouring bounds; the
/// independent-set case runs on the complement graph.
VertexSubset exact_optimum(const ErGraph& graph, SubsetKind kind, const ExactOptions& options = {});

struct MomentPoint {
  std::uint32_t x;
  double log_expected_count;  // natural log
};

/// log E[Z(x)] = log C(n, x) + C(x, 2) log(edge_prob) for x = 1..x_max.
struct MomentCurve {
  std::uint64_t n = 0;
  double edge_prob = 0.0;
  std::vector<MomentPoint> points;
};

MomentCurve first_moment_curve(std::uint64_t n, double edge_prob, std::optional<std::uint64_t> x_max = std::nullopt);
double log_expected_count(std::uint64_t n, double edge_prob, std::uint64_t x);

/// Largest x with log E[Z(x)] >= 0.
std::uint64_t crossing_point(const MomentCurve& curve);
/// Same, computed directly without materializing the curve.
std::uint64_t first_moment_crossing(std::uint64_t n, double edge_prob);

/// CSV with columns x,log2_expected_count.
void write_moment_csv(std::ostream& out, const MomentCurve& curve);

}  // namespace randopt
