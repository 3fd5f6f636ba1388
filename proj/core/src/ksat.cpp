#include "randopt/ksat.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "randopt/error.hpp"
#include "randopt/parallel.hpp"

namespace randopt {

std::size_t eval_clauses(const KSatFormula& formula, std::span<const std::uint8_t> a) {
  if (a.size() != formula.n) throw ParameterError("assignment length does not match variable count");
  std::size_t count = 0;
  for (std::size_t j = 0; j < formula.m(); ++j) {
    const auto clause = formula.clause(j);
    count += std::any_of(clause.begin(), clause.end(),
                         [&](Literal l) { return l.satisfied_by(a[l.var() - 1] != 0); });
  }
  return count;
}

std::uint64_t assignment_mask(std::span<const std::uint8_t> a) {
  std::uint64_t mask = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i]) mask |= std::uint64_t{1} << i;
  return mask;
}

namespace {

// Literal slot: 2 * (var - 1) + negated.
std::size_t slot(Literal l) { return 2 * (l.var() - 1) + (l.negated() ? 1 : 0); }

/// Clause bookkeeping under a partial assignment with an undo trail.
class ClauseState {
 public:
  explicit ClauseState(const KSatFormula& f)
      : f_(f), m_(f.m()), k_(f.k), value_(f.n, kUnassigned), occurrences_(2 * f.n), true_count_(m_, 0),
        false_count_(m_, 0), open_occurrences_(2 * f.n, 0) {
    for (std::size_t j = 0; j < m_; ++j)
      for (Literal l : f.clause(j)) {
        occurrences_[slot(l)].push_back(static_cast<std::uint32_t>(j));
        ++open_occurrences_[slot(l)];
      }
  }

  static constexpr std::int8_t kUnassigned = -1;

  std::int8_t value(std::uint32_t var0) const { return value_[var0]; }
  std::size_t trail_size() const { return trail_.size(); }
  bool all_satisfied() const { return satisfied_ == m_; }
  bool conflict() const { return conflict_; }

  /// Makes literal `l` true.
  void assign(Literal l) {
    const std::uint32_t v = l.var() - 1;
    value_[v] = l.negated() ? 0 : 1;
    trail_.push_back(v);
    for (std::uint32_t c : occurrences_[slot(l)]) {
      if (true_count_[c]++ == 0) {
        ++satisfied_;
        for (Literal x : f_.clause(c)) --open_occurrences_[slot(x)];
      }
    }
    const Literal neg(l.var(), !l.negated());
    for (std::uint32_t c : occurrences_[slot(neg)]) {
      const std::uint32_t f = ++false_count_[c];
      if (true_count_[c] == 0) {
        if (f == k_) conflict_ = true;
        else if (f + 1 == k_) units_.push_back(c);
      }
    }
  }

  void undo_to(std::size_t size) {
    while (trail_.size() > size) {
      const std::uint32_t v = trail_.back();
      trail_.pop_back();
      const Literal l(v + 1, value_[v] == 0);
      for (std::uint32_t c : occurrences_[slot(l)]) {
        if (--true_count_[c] == 0) {
          --satisfied_;
          for (Literal x : f_.clause(c)) ++open_occurrences_[slot(x)];
        }
      }
      const Literal neg(l.var(), !l.negated());
      for (std::uint32_t c : occurrences_[slot(neg)]) --false_count_[c];
      value_[v] = kUnassigned;
    }
    units_.clear();
    conflict_ = false;
  }

  /// Unit propagation to fixpoint; false on conflict.
  bool propagate() {
    while (!conflict_ && !units_.empty()) {
      const std::uint32_t c = units_.back();
      units_.pop_back();
      if (true_count_[c] > 0) continue;
      for (Literal l : f_.clause(c)) {
        if (value_[l.var() - 1] == kUnassigned) {
          assign(l);
          break;
        }
      }
    }
    units_.clear();
    return !conflict_;
  }

  /// Assigns literals that occur with one polarity only among open clauses.
  void eliminate_pure() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::uint32_t v = 0; v < f_.n; ++v) {
        if (value_[v] != kUnassigned) continue;
        const auto pos = open_occurrences_[2 * v];
        const auto neg = open_occurrences_[2 * v + 1];
        if (pos > 0 && neg == 0) {
          assign(Literal(v + 1, false));
          changed = true;
        } else if (neg > 0 && pos == 0) {
          assign(Literal(v + 1, true));
          changed = true;
        }
      }
    }
  }

  /// Most frequent variable among the shortest open clauses; returns the
  /// literal of its more frequent polarity there (ties to positive).
  Literal choose_branch() const {
    std::uint32_t shortest = k_ + 1;
    for (std::size_t c = 0; c < m_; ++c)
      if (true_count_[c] == 0) shortest = std::min(shortest, k_ - false_count_[c]);
    std::vector<std::uint32_t> pos(f_.n, 0), neg(f_.n, 0);
    for (std::size_t c = 0; c < m_; ++c) {
      if (true_count_[c] != 0 || k_ - false_count_[c] != shortest) continue;
      for (Literal l : f_.clause(c))
        if (value_[l.var() - 1] == kUnassigned) ++(l.negated() ? neg : pos)[l.var() - 1];
    }
    std::uint32_t best = f_.n;
    std::uint32_t best_count = 0;
    for (std::uint32_t v = 0; v < f_.n; ++v) {
      if (value_[v] != kUnassigned) continue;
      const std::uint32_t count = pos[v] + neg[v];
      if (best == f_.n || count > best_count) {
        best = v;
        best_count = count;
      }
    }
    return Literal(best + 1, neg[best] > pos[best]);
  }

  std::uint32_t first_unassigned() const {
    for (std::uint32_t v = 0; v < f_.n; ++v)
      if (value_[v] == kUnassigned) return v;
    return f_.n;
  }

  const std::vector<std::int8_t>& values() const { return value_; }

 private:
  const KSatFormula& f_;
  std::size_t m_;
  std::uint32_t k_;
  std::vector<std::int8_t> value_;
  std::vector<std::vector<std::uint32_t>> occurrences_;
  std::vector<std::uint32_t> true_count_;
  std::vector<std::uint32_t> false_count_;
  std::vector<std::uint32_t> open_occurrences_;
  std::vector<std::uint32_t> trail_;
  std::vector<std::uint32_t> units_;
  std::size_t satisfied_ = 0;
  bool conflict_ = false;
};

struct Decision {
  std::size_t trail_size;
  Literal literal;
  bool flipped;
};

void queue_initial_units(ClauseState& state, const KSatFormula& f) {
  // Width-one clauses are units before any assignment.
  if (f.k != 1) return;
  for (std::size_t j = 0; j < f.m() && !state.conflict(); ++j) {
    const Literal l = f.clause(j)[0];
    // An opposite earlier unit has already flagged the conflict.
    if (state.value(l.var() - 1) == ClauseState::kUnassigned) state.assign(l);
  }
}

}  // namespace

DpllResult dpll_solve(const KSatFormula& formula, const DpllOptions& options) {
  DpllResult result;
  ClauseState state(formula);
  std::vector<Decision> stack;
  queue_initial_units(state, formula);
  bool ok = !state.conflict() && state.propagate();
  if (!ok) return result;

  while (true) {
    if (ok) {
      if (options.pure_literals) state.eliminate_pure();
      if (state.all_satisfied()) {
        result.status = SatStatus::kSat;
        result.assignment.resize(formula.n);
        for (std::uint32_t v = 0; v < formula.n; ++v) result.assignment[v] = state.values()[v] == 1 ? 1 : 0;
        if (!satisfies(formula, result.assignment)) throw Error("DPLL produced an invalid witness");
        return result;
      }
      if (++result.nodes > options.node_budget) throw BudgetError("DPLL node budget exhausted");
      const Literal l = state.choose_branch();
      stack.push_back({state.trail_size(), l, false});
      state.assign(l);
      ok = state.propagate();
      continue;
    }
    // Conflict: chronological backtracking to the last unflipped decision.
    while (!stack.empty() && stack.back().flipped) {
      state.undo_to(stack.back().trail_size);
      stack.pop_back();
    }
    if (stack.empty()) return result;
    Decision& d = stack.back();
    state.undo_to(d.trail_size);
    d.flipped = true;
    if (++result.nodes > options.node_budget) throw BudgetError("DPLL node budget exhausted");
    state.assign(Literal(d.literal.var(), !d.literal.negated()));
    ok = state.propagate();
  }
}

std::vector<Assignment> enumerate_solutions(const KSatFormula& formula, const EnumerateOptions& options) {
  if (formula.n > options.max_n || formula.n > 63)
    throw CapacityError("enumerate_solutions: n = " + std::to_string(formula.n) + " exceeds cap " +
                        std::to_string(options.max_n));
  std::vector<std::uint64_t> masks;
  ClauseState state(formula);
  queue_initial_units(state, formula);
  if (state.conflict() || !state.propagate()) return {};

  auto emit_completions = [&] {
    std::uint64_t base = 0;
    std::vector<std::uint32_t> free_vars;
    for (std::uint32_t v = 0; v < formula.n; ++v) {
      const auto val = state.values()[v];
      if (val == ClauseState::kUnassigned) free_vars.push_back(v);
      else if (val == 1) base |= std::uint64_t{1} << v;
    }
    const std::uint64_t count = std::uint64_t{1} << free_vars.size();
    if (masks.size() + count > options.max_solutions)
      throw CapacityError("enumerate_solutions: more than " + std::to_string(options.max_solutions) + " solutions");
    for (std::uint64_t sub = 0; sub < count; ++sub) {
      std::uint64_t mask = base;
      for (std::size_t b = 0; b < free_vars.size(); ++b)
        if ((sub >> b) & 1U) mask |= std::uint64_t{1} << free_vars[b];
      masks.push_back(mask);
    }
  };

  // Depth-first over the lowest unassigned variable, both polarities.
  struct Frame {
    std::size_t trail_size;
    std::uint32_t var;
    int next_value;
  };
  std::vector<Frame> stack;
  auto descend = [&] {
    if (state.all_satisfied()) {
      emit_completions();
      return;
    }
    stack.push_back({state.trail_size(), state.first_unassigned(), 0});
  };
  descend();
  while (!stack.empty()) {
    Frame& f = stack.back();
    state.undo_to(f.trail_size);
    if (f.next_value > 1) {
      stack.pop_back();
      continue;
    }
    const bool value = f.next_value == 1;
    ++f.next_value;
    state.assign(Literal(f.var + 1, !value));
    if (state.propagate()) descend();
  }
  std::sort(masks.begin(), masks.end());
  std::vector<Assignment> out;
  out.reserve(masks.size());
  for (std::uint64_t mask : masks) {
    Assignment a(formula.n);
    for (std::uint32_t v = 0; v < formula.n; ++v) a[v] = (mask >> v) & 1U;
    out.push_back(std::move(a));
  }
  return out;
}

WalkSatResult walksat(const KSatFormula& formula, RngStream& rng, const WalkSatOptions& options) {
  if (!(options.noise >= 0.0 && options.noise <= 1.0)) throw ParameterError("noise must lie in [0, 1]");
  const std::size_t m = formula.m();
  const std::uint32_t n = formula.n;
  WalkSatResult result;
  Assignment a(n);
  for (auto& v : a) v = rng.bernoulli(0.5) ? 1 : 0;

  std::vector<std::vector<std::uint32_t>> occurrences(2 * n);
  for (std::size_t j = 0; j < m; ++j)
    for (Literal l : formula.clause(j)) occurrences[slot(l)].push_back(static_cast<std::uint32_t>(j));

  std::vector<std::uint32_t> true_count(m, 0);
  std::vector<std::uint32_t> unsat;
  std::vector<std::size_t> position(m, SIZE_MAX);
  auto add_unsat = [&](std::uint32_t c) {
    position[c] = unsat.size();
    unsat.push_back(c);
  };
  auto remove_unsat = [&](std::uint32_t c) {
    const std::size_t p = position[c];
    unsat[p] = unsat.back();
    position[unsat[p]] = p;
    unsat.pop_back();
    position[c] = SIZE_MAX;
  };
  for (std::size_t j = 0; j < m; ++j) {
    for (Literal l : formula.clause(j)) true_count[j] += l.satisfied_by(a[l.var() - 1] != 0);
    if (true_count[j] == 0) add_unsat(static_cast<std::uint32_t>(j));
  }

  auto true_literal = [&](std::uint32_t v) { return Literal(v + 1, a[v] == 0); };
  auto break_count = [&](std::uint32_t v) {
    std::uint32_t b = 0;
    for (std::uint32_t c : occurrences[slot(true_literal(v))]) b += true_count[c] == 1;
    return b;
  };
  auto flip = [&](std::uint32_t v) {
    const Literal was_true = true_literal(v);
    const Literal now_true(v + 1, !was_true.negated());
    a[v] ^= 1U;
    for (std::uint32_t c : occurrences[slot(was_true)])
      if (--true_count[c] == 0) add_unsat(c);
    for (std::uint32_t c : occurrences[slot(now_true)])
      if (true_count[c]++ == 0) remove_unsat(c);
  };

  while (!unsat.empty() && result.flips < options.max_flips) {
    const std::uint32_t c = unsat[rng.below(unsat.size())];
    const auto clause = formula.clause(c);
    std::uint32_t chosen;
    if (rng.uniform() < options.noise) {
      chosen = clause[rng.below(clause.size())].var() - 1;
    } else {
      chosen = clause[0].var() - 1;
      std::uint32_t best = break_count(chosen);
      for (std::size_t i = 1; i < clause.size(); ++i) {
        const std::uint32_t v = clause[i].var() - 1;
        const std::uint32_t b = break_count(v);
        if (b < best) {
          best = b;
          chosen = v;
        }
      }
    }
    flip(chosen);
    ++result.flips;
  }
  result.found = unsat.empty();
  result.assignment = std::move(a);
  if (result.found && !satisfies(formula, result.assignment)) throw Error("WalkSAT produced an invalid witness");
  return result;
}

std::vector<SatMomentPoint> sat_moment_curve(std::uint32_t n, std::uint32_t k, std::span<const double> densities) {
  if (k < 1) throw ParameterError("clause width K must be at least 1");
  const double per_clause = std::log1p(-std::ldexp(1.0, -static_cast<int>(k)));
  std::vector<SatMomentPoint> out;
  out.reserve(densities.size());
  for (double c : densities) {
    const double m = std::round(c * n);
    out.push_back({c, n * std::log(2.0) + m * per_clause});
  }
  return out;
}

double first_moment_density(std::uint32_t k) {
  if (k < 1) throw ParameterError("clause width K must be at least 1");
  return std::log(2.0) / -std::log1p(-std::ldexp(1.0, -static_cast<int>(k)));
}

std::vector<SatCurvePoint> sat_curve(std::span<const double> densities, const SatCurveOptions& options,
                                     const RngStream& root) {
  const std::size_t trials = options.trials;
  struct Outcome {
    bool sat = false;
    bool undecided = false;
    double work = 0.0;
  };
  std::vector<Outcome> outcomes(densities.size() * trials);
  parallel_for(outcomes.size(), options.jobs, [&](std::size_t idx) {
    const std::size_t d = idx / trials;
    const std::size_t t = idx % trials;
    RngStream rng = root.child("d" + std::to_string(d)).child("t" + std::to_string(t));
    const auto m = static_cast<std::size_t>(std::llround(densities[d] * options.n));
    const KSatFormula f = gen_ksat(options.n, m, options.k, rng);
    Outcome& out = outcomes[idx];
    if (options.solver == SatSolver::kDpll) {
      try {
        const DpllResult r = dpll_solve(f, options.dpll);
        out.sat = r.status == SatStatus::kSat;
        out.work = static_cast<double>(r.nodes);
      } catch (const BudgetError&) {
        out.undecided = true;
        out.work = static_cast<double>(options.dpll.node_budget);
      }
    } else {
      RngStream walk_rng = rng.child("walksat");
      const WalkSatResult r = walksat(f, walk_rng, options.walk);
      out.sat = r.found;
      out.undecided = !r.found;
      out.work = static_cast<double>(r.flips);
    }
  });
  std::vector<SatCurvePoint> curve;
  for (std::size_t d = 0; d < densities.size(); ++d) {
    SatCurvePoint pt;
    pt.density = densities[d];
    pt.trials = trials;
    double work = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const Outcome& o = outcomes[d * trials + t];
      pt.satisfied += o.sat;
      pt.undecided += o.undecided;
      work += o.work;
    }
    pt.sat_fraction = trials == 0 ? 0.0 : static_cast<double>(pt.satisfied) / static_cast<double>(trials);
    pt.mean_work = trials == 0 ? 0.0 : work / static_cast<double>(trials);
    curve.push_back(pt);
  }
  return curve;
}

std::optional<double> half_crossing(std::span<const SatCurvePoint> curve) {
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    const double a = curve[i].sat_fraction;
    const double b = curve[i + 1].sat_fraction;
    if (a >= 0.5 && b < 0.5) {
      const double t = (a - 0.5) / (a - b);
      return curve[i].density + t * (curve[i + 1].density - curve[i].density);
    }
  }
  return std::nullopt;
}

SlopeFit fit_sat_slope(std::span<const SatCurvePoint> curve) {
  const auto count = static_cast<double>(curve.size());
  if (curve.size() < 3) throw InsufficientDataError("slope fit needs at least three points");
  double sx = 0, sy = 0;
  for (const auto& p : curve) {
    sx += p.density;
    sy += p.sat_fraction;
  }
  const double mx = sx / count, my = sy / count;
  double sxx = 0, sxy = 0;
  for (const auto& p : curve) {
    sxx += (p.density - mx) * (p.density - mx);
    sxy += (p.density - mx) * (p.sat_fraction - my);
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0;
  for (const auto& p : curve) {
    const double r = p.sat_fraction - (fit.intercept + fit.slope * p.density);
    rss += r * r;
  }
  fit.slope_stderr = std::sqrt(rss / (count - 2.0) / sxx);
  return fit;
}

void write_sat_curve_csv(std::ostream& out, std::span<const SatCurvePoint> curve) {
  out << "density,trials,sat_fraction\r\n";
  char buf[96];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof buf, "%.6g,%zu,%.6g", p.density, p.trials, p.sat_fraction);
    out << buf << "\r\n";
  }
}

}  // namespace randopt
