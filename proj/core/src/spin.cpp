#include "randopt/spin.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "randopt/combinatorics.hpp"

namespace randopt {

namespace {

double scale(std::uint32_t n, std::uint32_t p) {
  return std::pow(static_cast<double>(n), -0.5 * (static_cast<double>(p) + 1.0));
}

void check_dims(const GaussianTensor& j, std::size_t len) {
  if (len != j.n) throw ParameterError("configuration length does not match tensor dimension");
}

/// Tuples containing each vertex, with the other p-1 members.
struct Incidence {
  std::vector<std::size_t> offsets;  // n + 1
  std::vector<std::uint64_t> tuple;  // colex index
  std::vector<std::uint32_t> others;  // (p - 1) per entry

  explicit Incidence(const GaussianTensor& j) : offsets(j.n + 1, 0) {
    for_each_tuple(j.n, j.p, [&](std::span<const std::uint32_t> t, std::uint64_t) {
      for (std::uint32_t v : t) ++offsets[v + 1];
    });
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    tuple.resize(offsets.back());
    others.resize(offsets.back() * (j.p - 1));
    std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
    for_each_tuple(j.n, j.p, [&](std::span<const std::uint32_t> t, std::uint64_t rank) {
      for (std::uint32_t v : t) {
        const std::size_t slot = fill[v]++;
        tuple[slot] = rank;
        std::size_t o = slot * (j.p - 1);
        for (std::uint32_t w : t)
          if (w != v) others[o++] = w;
      }
    });
  }
};

/// Tracks the unnormalized sum S(sigma) and answers single-flip queries.
class FlipEngine {
 public:
  FlipEngine(const GaussianTensor& j, SpinConfig sigma) : j_(j), sigma_(std::move(sigma)) {
    if (j.p == 2) {
      const std::uint32_t n = j.n;
      w_.assign(static_cast<std::size_t>(n) * n, 0.0);
      std::size_t idx = 0;
      for (std::uint32_t b = 1; b < n; ++b)
        for (std::uint32_t a = 0; a < b; ++a, ++idx) {
          w_[a * n + b] = j.entries[idx];
          w_[b * n + a] = j.entries[idx];
        }
      h_.assign(n, 0.0);
      for (std::uint32_t a = 0; a < n; ++a) {
        double s = 0.0;
        for (std::uint32_t b = 0; b < n; ++b) s += w_[a * n + b] * sigma_[b];
        h_[a] = s;
      }
    } else {
      inc_.emplace(j);
    }
    sum_ = energy(j, sigma_) / scale(j.n, j.p);
  }

  double field(std::uint32_t i) const {
    if (j_.p == 2) return h_[i];
    const std::uint32_t q = j_.p - 1;
    double s = 0.0;
    for (std::size_t e = inc_->offsets[i]; e < inc_->offsets[i + 1]; ++e) {
      double prod = j_.entries[inc_->tuple[e]];
      const std::uint32_t* o = &inc_->others[e * q];
      for (std::uint32_t k = 0; k < q; ++k) prod *= sigma_[o[k]];
      s += prod;
    }
    return s;
  }

  double flip_delta_raw(std::uint32_t i) const { return -2.0 * sigma_[i] * field(i); }

  void flip(std::uint32_t i, double delta_raw) {
    sum_ += delta_raw;
    const double change = -2.0 * sigma_[i];
    sigma_[i] = static_cast<std::int8_t>(-sigma_[i]);
    if (j_.p == 2) {
      const std::uint32_t n = j_.n;
      const double* col = &w_[static_cast<std::size_t>(i) * n];
      for (std::uint32_t b = 0; b < n; ++b) h_[b] += col[b] * change;
    }
  }

  double sum() const noexcept { return sum_; }
  const SpinConfig& sigma() const noexcept { return sigma_; }

 private:
  const GaussianTensor& j_;
  SpinConfig sigma_;
  std::vector<double> w_;
  std::vector<double> h_;
  std::optional<Incidence> inc_;
  double sum_ = 0.0;
};

}  // namespace

bool is_spin_config(std::span<const std::int8_t> sigma) noexcept {
  return std::all_of(sigma.begin(), sigma.end(), [](std::int8_t s) { return s == 1 || s == -1; });
}

double energy(const GaussianTensor& couplings, std::span<const std::int8_t> sigma) {
  check_dims(couplings, sigma.size());
  const std::uint32_t n = couplings.n;
  double total = 0.0;
  if (couplings.p == 2) {
    // Row-by-row triangular matrix-vector product.
    std::size_t idx = 0;
    for (std::uint32_t b = 1; b < n; ++b) {
      double row = 0.0;
      for (std::uint32_t a = 0; a < b; ++a, ++idx) row += couplings.entries[idx] * sigma[a];
      total += row * sigma[b];
    }
  } else {
    for_each_tuple(n, couplings.p, [&](std::span<const std::uint32_t> t, std::uint64_t rank) {
      int sign = 1;
      for (std::uint32_t v : t) sign *= sigma[v];
      total += sign * couplings.entries[rank];
    });
  }
  return total * scale(n, couplings.p);
}

double multilinear_energy(const GaussianTensor& couplings, std::span<const double> x) {
  check_dims(couplings, x.size());
  const std::uint32_t n = couplings.n;
  double total = 0.0;
  if (couplings.p == 2) {
    std::size_t idx = 0;
    for (std::uint32_t b = 1; b < n; ++b) {
      double row = 0.0;
      for (std::uint32_t a = 0; a < b; ++a, ++idx) row += couplings.entries[idx] * x[a];
      total += row * x[b];
    }
  } else {
    for_each_tuple(n, couplings.p, [&](std::span<const std::uint32_t> t, std::uint64_t rank) {
      double prod = couplings.entries[rank];
      for (std::uint32_t v : t) prod *= x[v];
      total += prod;
    });
  }
  return total * scale(n, couplings.p);
}

std::vector<double> energy_gradient(const GaussianTensor& couplings, std::span<const double> x) {
  check_dims(couplings, x.size());
  const std::uint32_t n = couplings.n;
  const std::uint32_t p = couplings.p;
  std::vector<double> grad(n, 0.0);
  if (p == 2) {
    std::size_t idx = 0;
    for (std::uint32_t b = 1; b < n; ++b)
      for (std::uint32_t a = 0; a < b; ++a, ++idx) {
        const double jab = couplings.entries[idx];
        grad[a] += jab * x[b];
        grad[b] += jab * x[a];
      }
  } else {
    std::vector<double> prefix(p + 1), suffix(p + 1);
    for_each_tuple(n, p, [&](std::span<const std::uint32_t> t, std::uint64_t rank) {
      prefix[0] = 1.0;
      for (std::uint32_t k = 0; k < p; ++k) prefix[k + 1] = prefix[k] * x[t[k]];
      suffix[p] = 1.0;
      for (std::uint32_t k = p; k-- > 0;) suffix[k] = suffix[k + 1] * x[t[k]];
      const double jt = couplings.entries[rank];
      for (std::uint32_t k = 0; k < p; ++k) grad[t[k]] += jt * prefix[k] * suffix[k + 1];
    });
  }
  const double s = scale(n, p);
  for (double& g : grad) g *= s;
  return grad;
}

double flip_delta(const GaussianTensor& couplings, std::span<const std::int8_t> sigma, std::uint32_t i) {
  check_dims(couplings, sigma.size());
  if (i >= couplings.n) throw ParameterError("spin index out of range");
  double field = 0.0;
  for_each_tuple(couplings.n, couplings.p, [&](std::span<const std::uint32_t> t, std::uint64_t rank) {
    if (std::find(t.begin(), t.end(), i) == t.end()) return;
    double prod = couplings.entries[rank];
    for (std::uint32_t v : t)
      if (v != i) prod *= sigma[v];
    field += prod;
  });
  return -2.0 * sigma[i] * field * scale(couplings.n, couplings.p);
}

double overlap(std::span<const std::int8_t> a, std::span<const std::int8_t> b) {
  if (a.size() != b.size()) throw ParameterError("overlap of configurations with different lengths");
  if (a.empty()) throw ParameterError("overlap of empty configurations");
  long dot = 0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return static_cast<double>(dot) / static_cast<double>(a.size());
}

std::size_t hamming_distance(std::span<const std::int8_t> a, std::span<const std::int8_t> b) {
  if (a.size() != b.size()) throw ParameterError("Hamming distance of configurations with different lengths");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

SpinConfig config_from_mask(std::uint64_t mask, std::uint32_t n) {
  SpinConfig s(n);
  for (std::uint32_t i = 0; i < n; ++i) s[i] = ((mask >> i) & 1U) ? -1 : 1;
  return s;
}

void for_each_configuration(const GaussianTensor& couplings, bool half,
                            const std::function<void(std::uint64_t, double)>& visit) {
  const std::uint32_t n = couplings.n;
  if (n > 40) throw CapacityError("exhaustive enumeration beyond 40 spins");
  const std::uint32_t offset = half ? 1 : 0;
  const std::uint32_t bits = n - offset;
  FlipEngine engine(couplings, SpinConfig(n, 1));
  const double s = scale(n, couplings.p);
  std::uint64_t mask = 0;
  visit(mask, engine.sum() * s);
  const std::uint64_t total = std::uint64_t{1} << bits;
  for (std::uint64_t k = 1; k < total; ++k) {
    const auto i = static_cast<std::uint32_t>(std::countr_zero(k)) + offset;
    engine.flip(i, engine.flip_delta_raw(i));
    mask ^= std::uint64_t{1} << i;
    visit(mask, engine.sum() * s);
  }
}

GroundState brute_force_ground_state(const GaussianTensor& couplings, const BruteForceOptions& options) {
  const std::uint32_t cap = couplings.p == 2 ? options.max_n_quadratic : options.max_n_general;
  if (couplings.n > cap && !options.allow_over_cap)
    throw CapacityError("brute force ground state: n = " + std::to_string(couplings.n) + " exceeds cap " +
                        std::to_string(cap));
  const bool even = couplings.p % 2 == 0;
  std::uint64_t best_mask = 0;
  double best = -INFINITY;
  for_each_configuration(couplings, even, [&](std::uint64_t mask, double e) {
    if (e > best) {
      best = e;
      best_mask = mask;
    }
  });
  GroundState gs;
  gs.config = config_from_mask(best_mask, couplings.n);
  gs.energy = energy(couplings, gs.config);
  return gs;
}

double BetaSchedule::at(std::size_t sweep, std::size_t sweeps) const noexcept {
  if (sweeps <= 1) return beta_end;
  const double frac = static_cast<double>(sweep) / static_cast<double>(sweeps - 1);
  return beta_start + (beta_end - beta_start) * frac;
}

double metropolis_accept_probability(double beta, std::uint32_t n, double delta) noexcept {
  if (delta >= 0.0) return 1.0;
  return std::exp(beta * static_cast<double>(n) * delta);
}

ChainSummary metropolis_chain(const GaussianTensor& couplings, const BetaSchedule& schedule, std::size_t sweeps,
                              RngStream& rng, const ChainOptions& options) {
  if (sweeps < 1) throw ParameterError("metropolis_chain needs at least one sweep");
  if (!(schedule.beta_start >= 0.0) || !(schedule.beta_end >= 0.0))
    throw ParameterError("inverse temperature must be nonnegative");
  const std::uint32_t n = couplings.n;
  SpinConfig start;
  if (options.initial) {
    check_dims(couplings, options.initial->size());
    if (!is_spin_config(*options.initial)) throw ParameterError("initial configuration is not a spin vector");
    start = *options.initial;
  } else {
    start.resize(n);
    for (auto& s : start) s = rng.bernoulli(0.5) ? 1 : -1;
  }
  if (options.record_state_histogram && n > 16) throw CapacityError("state histogram limited to n <= 16");

  FlipEngine engine(couplings, start);
  const double s = scale(n, couplings.p);
  ChainSummary out;
  out.best = engine.sigma();
  double best_sum = engine.sum();
  if (options.record_state_histogram) out.state_histogram.assign(std::size_t{1} << n, 0);
  std::uint64_t mask = 0;
  for (std::uint32_t i = 0; i < n; ++i)
    if (start[i] < 0) mask |= std::uint64_t{1} << i;

  std::uint64_t accepted = 0;
  std::uint64_t proposed = 0;
  out.energy_trace.reserve(sweeps);
  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    const double beta = schedule.at(sweep, sweeps);
    for (std::uint32_t step = 0; step < n; ++step) {
      const auto i = static_cast<std::uint32_t>(rng.below(n));
      const double raw = engine.flip_delta_raw(i);
      const double u = rng.uniform();
      ++proposed;
      if (u < metropolis_accept_probability(beta, n, raw * s)) {
        engine.flip(i, raw);
        mask ^= std::uint64_t{1} << i;
        ++accepted;
        if (engine.sum() > best_sum) {
          best_sum = engine.sum();
          out.best = engine.sigma();
        }
      }
      if (options.record_state_histogram) ++out.state_histogram[mask];
    }
    out.energy_trace.push_back(engine.sum() * s);
  }
  out.final_config = engine.sigma();
  out.best_energy = energy(couplings, out.best);
  out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(proposed);
  return out;
}

namespace {

constexpr double kFreezeSlack = 1e-12;
constexpr double kStallFactor = 1e-10;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Walk state shared by the step logic.
class Walker {
 public:
  Walker(const GaussianTensor& j, RngStream& rng, const WalkOptions& opt)
      : j_(j), rng_(rng), opt_(opt), x_(j.n, 0.0), frozen_(j.n, false) {
    result_.relaxed.step_size = opt.delta;
    current_ = multilinear_energy(j_, x_);
    result_.trace.push_back({0, current_, 0, false});
  }

  WalkResult run() {
    bool stalled_once = false;
    while (frozen_count_ < j_.n && result_.relaxed.steps < opt_.max_steps) {
      if (degenerate()) {
        round_remaining();
        break;
      }
      std::vector<double> dir = projected(masked(energy_gradient(j_, x_)));
      const double threshold = kStallFactor * std::sqrt(static_cast<double>(j_.n));
      bool moved = false;
      if (std::sqrt(dot(dir, dir)) >= threshold) moved = try_direction(dir);
      if (moved) {
        stalled_once = false;
        continue;
      }
      if (stalled_once) throw StalledWalkError("guided walk stalled twice", finish_partial());
      stalled_once = true;
      ++result_.random_restarts;
      if (!random_step()) throw StalledWalkError("guided walk found no improving direction", finish_partial());
    }
    return finish();
  }

 private:
  std::vector<double> masked(std::vector<double> v) const {
    for (std::uint32_t i = 0; i < j_.n; ++i)
      if (frozen_[i]) v[i] = 0.0;
    return v;
  }

  // Directions the next step must be orthogonal to, restricted to free coordinates.
  std::vector<std::vector<double>> constraints() const {
    std::vector<std::vector<double>> basis;
    const std::size_t first = opt_.full_history ? 0 : (history_.empty() ? 0 : history_.size() - 1);
    for (std::size_t h = first; h < history_.size(); ++h) {
      std::vector<double> v = masked(history_[h]);
      for (const auto& b : basis) {
        const double c = dot(v, b);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * b[i];
      }
      const double norm = std::sqrt(dot(v, v));
      if (norm > 1e-14) {
        for (double& e : v) e /= norm;
        basis.push_back(std::move(v));
      }
    }
    return basis;
  }

  bool degenerate() const { return constraints().size() >= j_.n - frozen_count_; }

  std::vector<double> projected(std::vector<double> v) const {
    // Two passes of Gram-Schmidt keep the residual orthogonal to round-off.
    const auto basis = constraints();
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) {
        const double c = dot(v, b);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * b[i];
      }
    return v;
  }

  // Moves along `dir` with backtracking; stops exactly on the boundary.
  bool try_direction(std::vector<double> dir) {
    const double norm = std::sqrt(dot(dir, dir));
    for (double& d : dir) d /= norm;
    const double free = static_cast<double>(j_.n - frozen_count_);
    double length = opt_.delta * std::sqrt(free);
    double to_boundary = INFINITY;
    for (std::uint32_t i = 0; i < j_.n; ++i) {
      if (frozen_[i] || dir[i] == 0.0) continue;
      const double limit = ((dir[i] > 0 ? 1.0 : -1.0) - x_[i]) / dir[i];
      to_boundary = std::min(to_boundary, limit);
    }
    length = std::min(length, to_boundary);
    for (int attempt = 0; attempt < 40; ++attempt, length *= 0.5) {
      std::vector<double> next = x_;
      for (std::uint32_t i = 0; i < j_.n; ++i) next[i] += length * dir[i];
      clamp(next, dir, length == to_boundary);
      const double e = multilinear_energy(j_, next);
      if (e >= current_) {
        accept(std::move(next));
        return true;
      }
    }
    return false;
  }

  void clamp(std::vector<double>& next, const std::vector<double>& dir, bool hit_boundary) const {
    for (std::uint32_t i = 0; i < j_.n; ++i) {
      if (frozen_[i]) continue;
      if (hit_boundary && dir[i] != 0.0) {
        const double target = dir[i] > 0 ? 1.0 : -1.0;
        if (std::abs(next[i] - target) <= 1e-9) next[i] = target;
      }
      if (next[i] > 1.0) next[i] = 1.0;
      if (next[i] < -1.0) next[i] = -1.0;
    }
  }

  bool random_step() {
    for (int draw = 0; draw < 64; ++draw) {
      std::vector<double> dir(j_.n, 0.0);
      for (std::uint32_t i = 0; i < j_.n; ++i)
        if (!frozen_[i]) dir[i] = rng_.normal();
      dir = projected(std::move(dir));
      if (std::sqrt(dot(dir, dir)) < 1e-12) continue;
      if (try_direction(dir)) return true;
      for (double& d : dir) d = -d;
      if (try_direction(dir)) return true;
    }
    return false;
  }

  void accept(std::vector<double> next) {
    std::vector<double> step(j_.n);
    for (std::uint32_t i = 0; i < j_.n; ++i) step[i] = next[i] - x_[i];
    x_ = std::move(next);
    for (std::uint32_t i = 0; i < j_.n; ++i) {
      if (!frozen_[i] && std::abs(x_[i]) >= 1.0 - kFreezeSlack) {
        x_[i] = x_[i] > 0 ? 1.0 : -1.0;
        frozen_[i] = true;
        ++frozen_count_;
      }
    }
    current_ = multilinear_energy(j_, x_);
    ++result_.relaxed.steps;
    result_.trace.push_back({result_.relaxed.steps, current_, frozen_count_, false});
    if (opt_.record_steps) result_.steps.push_back(step);
    history_.push_back(std::move(step));
    if (!opt_.full_history && history_.size() > 1) history_.erase(history_.begin());
  }

  // The multilinear energy is affine in each coordinate, so moving one free
  // coordinate to the sign of its partial derivative never lowers it.
  void round_remaining() {
    for (std::uint32_t i = 0; i < j_.n; ++i) {
      if (frozen_[i]) continue;
      const double g = energy_gradient(j_, x_)[i];
      x_[i] = g >= 0.0 ? 1.0 : -1.0;
      frozen_[i] = true;
      ++frozen_count_;
      current_ = multilinear_energy(j_, x_);
      result_.trace.push_back({result_.relaxed.steps, current_, frozen_count_, true});
    }
  }

  WalkResult finish_partial() {
    result_.relaxed.point = x_;
    result_.config.resize(j_.n);
    for (std::uint32_t i = 0; i < j_.n; ++i) result_.config[i] = x_[i] >= 0.0 ? 1 : -1;
    result_.energy = energy(j_, result_.config);
    return result_;
  }

  WalkResult finish() {
    if (frozen_count_ < j_.n) round_remaining();
    return finish_partial();
  }

  const GaussianTensor& j_;
  RngStream& rng_;
  WalkOptions opt_;
  std::vector<double> x_;
  std::vector<bool> frozen_;
  std::uint32_t frozen_count_ = 0;
  double current_ = 0.0;
  std::vector<std::vector<double>> history_;
  WalkResult result_;
};

}  // namespace

WalkResult guided_walk(const GaussianTensor& couplings, RngStream& rng, const WalkOptions& options) {
  if (couplings.p < 2) throw ParameterError("guided walk needs p >= 2");
  if (!(options.delta > 0.0 && options.delta < 1.0)) throw ParameterError("walk step must lie in (0, 1)");
  return Walker(couplings, rng, options).run();
}

void write_walk_trace_csv(std::ostream& out, const std::vector<WalkRecord>& trace) {
  out << "step,energy,frozen_count\r\n";
  char buf[64];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%.17g", r.energy);
    out << r.step << ',' << buf << ',' << r.frozen << "\r\n";
  }
}

void write_energy_trace_csv(std::ostream& out, const std::vector<double>& trace) {
  out << "sweep,energy\r\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", trace[i]);
    out << i + 1 << ',' << buf << "\r\n";
  }
}

}  // namespace randopt
