#include "randopt/graphopt.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "randopt/combinatorics.hpp"
#include "randopt/error.hpp"

namespace randopt {

bool verify_subset(const ErGraph& graph, const VertexSubset& subset) {
  const auto& m = subset.members;
  for (std::size_t a = 0; a < m.size(); ++a) {
    if (m[a] >= graph.n()) return false;
    if (a > 0 && m[a] <= m[a - 1]) return false;
    for (std::size_t b = 0; b < a; ++b) {
      const bool edge = graph.has_edge(m[a], m[b]);
      if (edge != (subset.kind == SubsetKind::kClique)) return false;
    }
  }
  return true;
}

bool is_maximal(const ErGraph& graph, const VertexSubset& subset) {
  const bool want_edge = subset.kind == SubsetKind::kClique;
  for (std::uint32_t v = 0; v < graph.n(); ++v) {
    if (std::binary_search(subset.members.begin(), subset.members.end(), v)) continue;
    const bool compatible = std::all_of(subset.members.begin(), subset.members.end(),
                                        [&](std::uint32_t u) { return graph.has_edge(u, v) == want_edge; });
    if (compatible) return false;
  }
  return true;
}

VertexSubset greedy_scan(const ErGraph& graph, SubsetKind kind, std::span<const std::uint32_t> order) {
  const bool want_edge = kind == SubsetKind::kClique;
  VertexSubset out;
  out.kind = kind;
  const std::size_t words = graph.words_per_row();
  // bit set <=> vertex still compatible with every member so far
  std::vector<std::uint64_t> open(words, ~std::uint64_t{0});
  for (std::uint32_t v : order) {
    if (v >= graph.n()) throw ParameterError("scan order contains an out-of-range vertex");
    if (!((open[v >> 6] >> (v & 63)) & 1U)) continue;
    out.members.push_back(v);
    const auto row = graph.row(v);
    for (std::size_t w = 0; w < words; ++w) open[w] &= want_edge ? row[w] : ~row[w];
    open[v >> 6] &= ~(std::uint64_t{1} << (v & 63));
  }
  std::sort(out.members.begin(), out.members.end());
  return out;
}

namespace {

std::vector<std::uint32_t> scan_order(std::uint32_t n, RngStream& rng, bool fixed_order) {
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0U);
  if (!fixed_order) shuffle_indices(order.data(), order.size(), rng);
  return order;
}

/// Bitset branch and bound over a relabelled graph.
class CliqueSearch {
 public:
  explicit CliqueSearch(const ErGraph& graph) : n_(graph.n()), words_((graph.n() + 63) / 64) {
    // Relabel by nonincreasing degree, ties by lowest original index.
    order_.resize(n_);
    std::iota(order_.begin(), order_.end(), 0U);
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return graph.degree(a) > graph.degree(b); });
    adj_.assign(static_cast<std::size_t>(n_) * words_, 0);
    for (std::uint32_t a = 0; a < n_; ++a)
      for (std::uint32_t b = 0; b < n_; ++b)
        if (a != b && graph.has_edge(order_[a], order_[b])) set(&adj_[a * words_], b);
  }

  std::vector<std::uint32_t> run() {
    std::vector<std::uint64_t> candidates(words_, 0);
    for (std::uint32_t v = 0; v < n_; ++v) set(candidates.data(), v);
    current_.clear();
    best_.clear();
    if (n_ > 0) expand(candidates);
    std::vector<std::uint32_t> out;
    for (std::uint32_t v : best_) out.push_back(order_[v]);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  static void set(std::uint64_t* bits, std::uint32_t v) { bits[v >> 6] |= std::uint64_t{1} << (v & 63); }
  static void clear(std::uint64_t* bits, std::uint32_t v) { bits[v >> 6] &= ~(std::uint64_t{1} << (v & 63)); }

  bool empty(const std::vector<std::uint64_t>& bits) const {
    return std::all_of(bits.begin(), bits.end(), [](std::uint64_t w) { return w == 0; });
  }

  // Greedy sequential colouring; vertices come out with nondecreasing colour.
  void colour(const std::vector<std::uint64_t>& candidates, std::vector<std::uint32_t>& verts,
              std::vector<std::uint32_t>& colours) const {
    std::vector<std::uint64_t> uncoloured = candidates;
    std::vector<std::uint64_t> available(words_);
    std::uint32_t c = 0;
    while (!empty(uncoloured)) {
      ++c;
      available = uncoloured;
      for (std::size_t w = 0; w < words_; ++w) {
        while (available[w] != 0) {
          const auto v = static_cast<std::uint32_t>(w * 64 + std::countr_zero(available[w]));
          clear(available.data(), v);
          clear(uncoloured.data(), v);
          const std::uint64_t* nb = &adj_[v * words_];
          for (std::size_t x = w; x < words_; ++x) available[x] &= ~nb[x];
          verts.push_back(v);
          colours.push_back(c);
        }
      }
    }
  }

  void expand(std::vector<std::uint64_t> candidates) {
    std::vector<std::uint32_t> verts, colours;
    colour(candidates, verts, colours);
    for (std::size_t i = verts.size(); i-- > 0;) {
      if (current_.size() + colours[i] <= best_.size()) return;
      const std::uint32_t v = verts[i];
      current_.push_back(v);
      std::vector<std::uint64_t> next(words_);
      const std::uint64_t* nb = &adj_[v * words_];
      for (std::size_t w = 0; w < words_; ++w) next[w] = candidates[w] & nb[w];
      if (empty(next)) {
        if (current_.size() > best_.size()) best_ = current_;
      } else {
        expand(std::move(next));
      }
      current_.pop_back();
      clear(candidates.data(), v);
    }
  }

  std::uint32_t n_;
  std::size_t words_;
  std::vector<std::uint32_t> order_;
  std::vector<std::uint64_t> adj_;
  std::vector<std::uint32_t> current_;
  std::vector<std::uint32_t> best_;
};

}  // namespace

VertexSubset karp_greedy_clique(const ErGraph& graph, RngStream& rng, bool fixed_order) {
  const auto order = scan_order(graph.n(), rng, fixed_order);
  return greedy_scan(graph, SubsetKind::kClique, order);
}

VertexSubset greedy_independent_set(const ErGraph& graph, RngStream& rng, bool fixed_order) {
  const auto order = scan_order(graph.n(), rng, fixed_order);
  return greedy_scan(graph, SubsetKind::kIndependentSet, order);
}

VertexSubset exact_optimum(const ErGraph& graph, SubsetKind kind, const ExactOptions& options) {
  if (graph.n() > options.max_vertices && !options.allow_over_cap)
    throw CapacityError("exact_optimum: n = " + std::to_string(graph.n()) + " exceeds cap " +
                        std::to_string(options.max_vertices));
  VertexSubset out;
  out.kind = kind;
  if (kind == SubsetKind::kClique) {
    out.members = CliqueSearch(graph).run();
  } else {
    out.members = CliqueSearch(graph.complement()).run();
  }
  return out;
}

double log_expected_count(std::uint64_t n, double edge_prob, std::uint64_t x) {
  const double pairs = 0.5 * static_cast<double>(x) * (static_cast<double>(x) - 1.0);
  const double log_p = pairs == 0.0 ? 0.0 : pairs * std::log(edge_prob);
  return log_binomial(static_cast<double>(n), static_cast<double>(x)) + log_p;
}

MomentCurve first_moment_curve(std::uint64_t n, double edge_prob, std::optional<std::uint64_t> x_max) {
  if (n < 2) throw ParameterError("first_moment_curve needs n >= 2");
  if (!(edge_prob > 0.0 && edge_prob <= 1.0)) throw ParameterError("edge probability must lie in (0, 1]");
  MomentCurve curve{n, edge_prob, {}};
  const std::uint64_t last = std::min<std::uint64_t>(x_max.value_or(n), n);
  curve.points.reserve(last);
  for (std::uint64_t x = 1; x <= last; ++x)
    curve.points.push_back({static_cast<std::uint32_t>(x), log_expected_count(n, edge_prob, x)});
  return curve;
}

std::uint64_t crossing_point(const MomentCurve& curve) {
  std::uint64_t best = 0;
  for (const auto& pt : curve.points)
    if (pt.log_expected_count >= 0.0) best = pt.x;
  return best;
}

std::uint64_t first_moment_crossing(std::uint64_t n, double edge_prob) {
  // log E[Z(x)] is concave in x and nonnegative at x = 1, so the feasible
  // set is an initial segment; walk until it turns negative.
  std::uint64_t x = 1;
  while (x < n && log_expected_count(n, edge_prob, x + 1) >= 0.0) ++x;
  return x;
}

void write_moment_csv(std::ostream& out, const MomentCurve& curve) {
  out << "x,log2_expected_count\r\n";
  char buf[64];
  for (const auto& pt : curve.points) {
    std::snprintf(buf, sizeof buf, "%.12g", pt.log_expected_count / std::log(2.0));
    out << pt.x << ',' << buf << "\r\n";
  }
}

}  // namespace randopt
