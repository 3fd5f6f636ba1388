#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "randopt/rng.hpp"

namespace randopt {

/// Where an instance came from: enough to regenerate it.
struct Provenance {
  std::uint64_t seed = 0;
  std::string label;

  bool operator==(const Provenance&) const = default;
};

/// Erdos-Renyi graph stored as symmetric adjacency bit rows.
class ErGraph {
 public:
  ErGraph() = default;
  ErGraph(std::uint32_t n, double edge_prob, std::optional<double> avg_degree = std::nullopt);

  std::uint32_t n() const noexcept { return n_; }
  double edge_prob() const noexcept { return edge_prob_; }
  const std::optional<double>& avg_degree() const noexcept { return avg_degree_; }
  std::size_t words_per_row() const noexcept { return words_; }

  bool has_edge(std::uint32_t i, std::uint32_t j) const noexcept {
    return (rows_[i * words_ + (j >> 6)] >> (j & 63)) & 1U;
  }
  void set_edge(std::uint32_t i, std::uint32_t j, bool present);

  std::span<const std::uint64_t> row(std::uint32_t i) const noexcept {
    return {rows_.data() + i * words_, words_};
  }
  std::uint32_t degree(std::uint32_t i) const noexcept;
  std::uint64_t edge_count() const noexcept;
  /// Graph on the same vertices with every non-loop pair toggled.
  ErGraph complement() const;

  Provenance provenance;

  bool operator==(const ErGraph& other) const noexcept {
    return n_ == other.n_ && edge_prob_ == other.edge_prob_ && avg_degree_ == other.avg_degree_ &&
           rows_ == other.rows_ && provenance == other.provenance;
  }

 private:
  std::uint32_t n_ = 0;
  double edge_prob_ = 0.0;
  std::optional<double> avg_degree_;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> rows_;
};

/// Unordered pair {i < j} <-> index C(j, 2) + i.
std::uint64_t pair_index(std::uint32_t i, std::uint32_t j) noexcept;
std::pair<std::uint32_t, std::uint32_t> pair_from_index(std::uint64_t index) noexcept;

/// Gaussian couplings J over strictly increasing p-tuples, colex-indexed.
struct GaussianTensor {
  std::uint32_t n = 0;
  std::uint32_t p = 0;
  std::vector<double> entries;
  Provenance provenance;

  bool operator==(const GaussianTensor&) const = default;
};

/// DIMACS-style literal: variable in [1, n], sign carries negation.
class Literal {
 public:
  constexpr Literal() = default;
  constexpr Literal(std::uint32_t var, bool negated)
      : code_(negated ? -static_cast<std::int32_t>(var) : static_cast<std::int32_t>(var)) {}
  static constexpr Literal from_dimacs(std::int32_t code) {
    Literal l;
    l.code_ = code;
    return l;
  }

  constexpr std::uint32_t var() const noexcept {
    return static_cast<std::uint32_t>(code_ < 0 ? -code_ : code_);
  }
  constexpr bool negated() const noexcept { return code_ < 0; }
  constexpr std::int32_t dimacs() const noexcept { return code_; }
  /// True when the literal is satisfied by the value of its variable.
  constexpr bool satisfied_by(bool value) const noexcept { return value != negated(); }

  bool operator==(const Literal&) const = default;

 private:
  std::int32_t code_ = 0;
};

/// Conjunction of m clauses with exactly K literals each, stored flat.
struct KSatFormula {
  std::uint32_t n = 0;
  std::uint32_t k = 0;
  std::vector<Literal> literals;  // m * k entries
  Provenance provenance;

  std::size_t m() const noexcept { return k == 0 ? 0 : literals.size() / k; }
  double density() const noexcept { return n == 0 ? 0.0 : static_cast<double>(m()) / n; }
  std::span<const Literal> clause(std::size_t j) const noexcept { return {literals.data() + j * k, k}; }
  std::span<Literal> clause(std::size_t j) noexcept { return {literals.data() + j * k, k}; }

  bool operator==(const KSatFormula&) const = default;
};

using Instance = std::variant<ErGraph, GaussianTensor, KSatFormula>;

/// Graph with each unordered pair present independently with edge_prob.
ErGraph gen_er_graph(std::uint32_t n, double edge_prob, RngStream& rng);
/// Sparse model G(n, d/n); records d.
ErGraph gen_sparse_graph(std::uint32_t n, double avg_degree, RngStream& rng);

/// C(n, p) independent standard normal couplings.
GaussianTensor gen_gaussian_tensor(std::uint32_t n, std::uint32_t p, RngStream& rng);

/// m clauses over K distinct uniform variables, each literal negated w.p. 1/2.
KSatFormula gen_ksat(std::uint32_t n, std::size_t m, std::uint32_t k, RngStream& rng);

/// Draws a single clause in place; shared by the generator and path resampling.
void draw_clause(std::span<Literal> clause, std::uint32_t n, RngStream& rng);

/// Number of independently resampled units: vertex pairs, tensor entries or clauses.
std::uint64_t resampling_units(const Instance& instance) noexcept;

/// Redraws one unit from its marginal law.
void resample_unit(Instance& instance, std::uint64_t unit, RngStream& rng);

}  // namespace randopt
