#include "randopt/instances.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "randopt/combinatorics.hpp"
#include "randopt/error.hpp"

namespace randopt {

ErGraph::ErGraph(std::uint32_t n, double edge_prob, std::optional<double> avg_degree)
    : n_(n), edge_prob_(edge_prob), avg_degree_(avg_degree), words_((n + 63) / 64), rows_(n * words_, 0) {}

void ErGraph::set_edge(std::uint32_t i, std::uint32_t j, bool present) {
  if (i == j) throw ParameterError("self-loops are not allowed");
  const std::uint64_t bit_j = std::uint64_t{1} << (j & 63);
  const std::uint64_t bit_i = std::uint64_t{1} << (i & 63);
  if (present) {
    rows_[i * words_ + (j >> 6)] |= bit_j;
    rows_[j * words_ + (i >> 6)] |= bit_i;
  } else {
    rows_[i * words_ + (j >> 6)] &= ~bit_j;
    rows_[j * words_ + (i >> 6)] &= ~bit_i;
  }
}

std::uint32_t ErGraph::degree(std::uint32_t i) const noexcept {
  std::uint32_t d = 0;
  for (std::uint64_t w : row(i)) d += static_cast<std::uint32_t>(std::popcount(w));
  return d;
}

std::uint64_t ErGraph::edge_count() const noexcept {
  std::uint64_t total = 0;
  for (std::uint64_t w : rows_) total += static_cast<std::uint64_t>(std::popcount(w));
  return total / 2;
}

ErGraph ErGraph::complement() const {
  ErGraph out(n_, 1.0 - edge_prob_, std::nullopt);
  out.provenance = provenance;
  for (std::uint32_t i = 0; i < n_; ++i) {
    for (std::size_t w = 0; w < words_; ++w) out.rows_[i * words_ + w] = ~rows_[i * words_ + w];
    out.rows_[i * words_ + (i >> 6)] &= ~(std::uint64_t{1} << (i & 63));
    if (n_ % 64 != 0) out.rows_[i * words_ + words_ - 1] &= (std::uint64_t{1} << (n_ % 64)) - 1;
  }
  return out;
}

std::uint64_t pair_index(std::uint32_t i, std::uint32_t j) noexcept {
  if (i > j) std::swap(i, j);
  return static_cast<std::uint64_t>(j) * (j - 1) / 2 + i;
}

std::pair<std::uint32_t, std::uint32_t> pair_from_index(std::uint64_t index) noexcept {
  auto j = static_cast<std::uint32_t>((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(index))) / 2.0);
  while (static_cast<std::uint64_t>(j) * (j - 1) / 2 > index) --j;
  while (static_cast<std::uint64_t>(j + 1) * j / 2 <= index) ++j;
  const auto i = static_cast<std::uint32_t>(index - static_cast<std::uint64_t>(j) * (j - 1) / 2);
  return {i, j};
}

namespace {

void check_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("edge probability must lie in [0, 1]");
}

}  // namespace

namespace {

ErGraph fill_edges(ErGraph g, RngStream& rng) {
  g.provenance = {rng.seed(), rng.label()};
  for (std::uint32_t j = 1; j < g.n(); ++j)
    for (std::uint32_t i = 0; i < j; ++i)
      if (rng.bernoulli(g.edge_prob())) g.set_edge(i, j, true);
  return g;
}

}  // namespace

ErGraph gen_er_graph(std::uint32_t n, double edge_prob, RngStream& rng) {
  if (n < 1) throw ParameterError("graph needs at least one vertex");
  check_probability(edge_prob);
  return fill_edges(ErGraph(n, edge_prob), rng);
}

ErGraph gen_sparse_graph(std::uint32_t n, double avg_degree, RngStream& rng) {
  if (n < 1) throw ParameterError("graph needs at least one vertex");
  if (!(avg_degree >= 0.0) || avg_degree > n) throw ParameterError("average degree must lie in [0, n]");
  return fill_edges(ErGraph(n, avg_degree / n, avg_degree), rng);
}

GaussianTensor gen_gaussian_tensor(std::uint32_t n, std::uint32_t p, RngStream& rng) {
  if (p < 2) throw ParameterError("interaction order p must be at least 2");
  if (p > n) throw ParameterError("interaction order p exceeds dimension n");
  GaussianTensor t;
  t.n = n;
  t.p = p;
  t.provenance = {rng.seed(), rng.label()};
  t.entries.resize(binomial(n, p));
  for (double& e : t.entries) e = rng.normal();
  return t;
}

void draw_clause(std::span<Literal> clause, std::uint32_t n, RngStream& rng) {
  // Floyd's algorithm: uniform K-subset of [1, n].
  const auto k = static_cast<std::uint32_t>(clause.size());
  std::uint32_t filled = 0;
  std::vector<std::uint32_t> vars;
  vars.reserve(k);
  for (std::uint32_t j = n - k + 1; j <= n; ++j) {
    const auto t = static_cast<std::uint32_t>(rng.below(j)) + 1;
    if (std::find(vars.begin(), vars.end(), t) == vars.end()) {
      vars.push_back(t);
    } else {
      vars.push_back(j);
    }
    ++filled;
  }
  std::sort(vars.begin(), vars.end());
  for (std::uint32_t i = 0; i < filled; ++i) clause[i] = Literal(vars[i], rng.bernoulli(0.5));
}

KSatFormula gen_ksat(std::uint32_t n, std::size_t m, std::uint32_t k, RngStream& rng) {
  if (k < 1) throw ParameterError("clause width K must be at least 1");
  if (k > n) throw ParameterError("clause width K exceeds variable count n");
  KSatFormula f;
  f.n = n;
  f.k = k;
  f.provenance = {rng.seed(), rng.label()};
  f.literals.resize(m * k);
  for (std::size_t j = 0; j < m; ++j) draw_clause(f.clause(j), n, rng);
  return f;
}

std::uint64_t resampling_units(const Instance& instance) noexcept {
  struct Visitor {
    std::uint64_t operator()(const ErGraph& g) const { return static_cast<std::uint64_t>(g.n()) * (g.n() - 1) / 2; }
    std::uint64_t operator()(const GaussianTensor& t) const { return t.entries.size(); }
    std::uint64_t operator()(const KSatFormula& f) const { return f.m(); }
  };
  return std::visit(Visitor{}, instance);
}

void resample_unit(Instance& instance, std::uint64_t unit, RngStream& rng) {
  if (unit >= resampling_units(instance)) throw ParameterError("resampling unit out of range");
  struct Visitor {
    std::uint64_t unit;
    RngStream& rng;
    void operator()(ErGraph& g) const {
      const auto [i, j] = pair_from_index(unit);
      g.set_edge(i, j, rng.bernoulli(g.edge_prob()));
    }
    void operator()(GaussianTensor& t) const { t.entries[unit] = rng.normal(); }
    void operator()(KSatFormula& f) const { draw_clause(f.clause(unit), f.n, rng); }
  };
  std::visit(Visitor{unit, rng}, instance);
}

}  // namespace randopt
