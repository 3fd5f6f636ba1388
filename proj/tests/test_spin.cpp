#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "randopt/combinatorics.hpp"
#include "randopt/error.hpp"
#include "randopt/instances.hpp"
#include "randopt/spin.hpp"
#include "stats.hpp"

using namespace randopt;

namespace {

GaussianTensor tensor(std::uint32_t n, std::uint32_t p, std::vector<double> entries) {
  GaussianTensor j;
  j.n = n;
  j.p = p;
  j.entries = std::move(entries);
  return j;
}

SpinConfig random_config(std::uint32_t n, RngStream& r) {
  SpinConfig s(n);
  for (auto& v : s) v = r.bernoulli(0.5) ? 1 : -1;
  return s;
}

// Direct re-evaluation over all tuples, no shared code path with the fast kernels.
double naive_energy(const GaussianTensor& j, const SpinConfig& s) {
  double total = 0.0;
  for_each_tuple(j.n, j.p, [&](std::span<const std::uint32_t> t, std::uint64_t rank) {
    double prod = j.entries[rank];
    for (auto i : t) prod *= s[i];
    total += prod;
  });
  return total * std::pow(static_cast<double>(j.n), -(static_cast<double>(j.p) + 1.0) / 2.0);
}

double naive_ground_state(const GaussianTensor& j) {
  double best = -INFINITY;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << j.n); ++mask)
    best = std::max(best, naive_energy(j, config_from_mask(mask, j.n)));
  return best;
}

}  // namespace

TEST_CASE("energy of two spins") {
  const GaussianTensor j = tensor(2, 2, {1.0});
  CHECK(energy(j, SpinConfig{1, 1}) == doctest::Approx(std::pow(2.0, -1.5)));
  CHECK(energy(j, SpinConfig{1, -1}) == doctest::Approx(-0.353553).epsilon(1e-6));
  CHECK_THROWS_AS(energy(j, SpinConfig{1, 1, 1}), ParameterError);
}

TEST_CASE("energy matches naive evaluation and even-p flip symmetry") {
  const RngStream root(1, "energy");
  for (int s = 0; s < 100; ++s) {
    RngStream r = root.child(s);
    const auto p = static_cast<std::uint32_t>(2 + r.below(3));
    const auto n = static_cast<std::uint32_t>(p + r.below(10));
    const GaussianTensor j = gen_gaussian_tensor(n, p, r);
    SpinConfig sigma = random_config(n, r);
    const double e = energy(j, sigma);
    CHECK(e == doctest::Approx(naive_energy(j, sigma)).epsilon(1e-12));
    SpinConfig flipped = sigma;
    for (auto& v : flipped) v = static_cast<std::int8_t>(-v);
    if (p % 2 == 0) CHECK(energy(j, flipped) == doctest::Approx(e).epsilon(1e-12));
    else CHECK(energy(j, flipped) == doctest::Approx(-e).epsilon(1e-12));
    const auto i = static_cast<std::uint32_t>(r.below(n));
    SpinConfig one = sigma;
    one[i] = static_cast<std::int8_t>(-one[i]);
    CHECK(flip_delta(j, sigma, i) == doctest::Approx(energy(j, one) - e).epsilon(1e-9));
  }
}

TEST_CASE("gradient agrees with central finite differences") {
  const RngStream root(2, "gradient");
  const double h = 1e-5;
  for (int s = 0; s < 50; ++s) {
    RngStream r = root.child(s);
    const auto p = static_cast<std::uint32_t>(2 + r.below(3));
    const auto n = static_cast<std::uint32_t>(std::max<std::uint64_t>(p, 2 + r.below(29)));
    const GaussianTensor j = gen_gaussian_tensor(n, p, r);
    std::vector<double> x(n);
    for (auto& v : x) v = 2.0 * r.uniform() - 1.0;
    const auto g = energy_gradient(j, x);
    double err = 0.0, scale = 0.0;
    for (std::uint32_t i = 0; i < n; ++i) {
      auto up = x, down = x;
      up[i] += h;
      down[i] -= h;
      const double fd = (multilinear_energy(j, up) - multilinear_energy(j, down)) / (2 * h);
      err = std::max(err, std::abs(fd - g[i]));
      scale = std::max(scale, std::abs(g[i]));
    }
    CHECK(err <= 1e-5 * scale);
  }
}

TEST_CASE("quadratic gradient identity and zero gradient at the centre") {
  RngStream r(3, "grad-id");
  const std::uint32_t n = 9;
  const GaussianTensor j = gen_gaussian_tensor(n, 2, r);
  std::vector<double> x(n);
  for (auto& v : x) v = 2.0 * r.uniform() - 1.0;
  const auto g = energy_gradient(j, x);
  for (std::uint32_t i = 0; i < n; ++i) {
    double expect = 0.0;
    for (std::uint32_t k = 0; k < n; ++k) {
      if (k == i) continue;
      const std::uint32_t t[2] = {std::min(i, k), std::max(i, k)};
      expect += j.entries[colex_rank(t)] * x[k];
    }
    CHECK(g[i] == doctest::Approx(expect * std::pow(n, -1.5)).epsilon(1e-12));
  }
  const GaussianTensor j3 = gen_gaussian_tensor(8, 3, r);
  for (double v : energy_gradient(j3, std::vector<double>(8, 0.0))) CHECK(v == 0.0);
}

TEST_CASE("brute-force ground states") {
  const GaussianTensor two = tensor(2, 2, {-0.7});
  CHECK(brute_force_ground_state(two).energy == doctest::Approx(0.7 * std::pow(2.0, -1.5)));

  // colex order over pairs: (0,1), (0,2), (1,2)
  const GaussianTensor three = tensor(3, 2, {1.0, -2.0, 1.0});
  const GroundState gs = brute_force_ground_state(three);
  CHECK(gs.energy == doctest::Approx(2.0 / std::pow(3.0, 1.5)));
  // (+1,+1,-1) and (+1,-1,-1) tie.
  CHECK(energy(three, SpinConfig{1, 1, -1}) == doctest::Approx(gs.energy));
  CHECK(energy(three, gs.config) == gs.energy);
  CHECK(gs.config[0] == 1);

  RngStream r(4, "cap");
  CHECK_THROWS_AS(brute_force_ground_state(gen_gaussian_tensor(25, 2, r)), CapacityError);
  CHECK_THROWS_AS(brute_force_ground_state(gen_gaussian_tensor(19, 3, r)), CapacityError);
}

TEST_CASE("gray-code enumeration agrees with naive enumeration") {
  const RngStream root(5, "oracle");
  for (int s = 0; s < 100; ++s) {
    RngStream r = root.child(s);
    const auto p = static_cast<std::uint32_t>(2 + r.below(2));
    const auto n = static_cast<std::uint32_t>(p + r.below(std::min<std::uint64_t>(14 - p, 9) + 1));
    const GaussianTensor j = gen_gaussian_tensor(n, p, r);
    const GroundState gs = brute_force_ground_state(j);
    CHECK(gs.energy == doctest::Approx(naive_ground_state(j)).epsilon(1e-12));
    if (p % 2 == 0) CHECK(gs.config[0] == 1);
  }
}

TEST_CASE("gray-code energies are exact for every visited configuration") {
  RngStream r(6, "visit");
  const GaussianTensor j = gen_gaussian_tensor(7, 3, r);
  std::size_t visits = 0;
  for_each_configuration(j, false, [&](std::uint64_t mask, double e) {
    ++visits;
    CHECK(e == doctest::Approx(naive_energy(j, config_from_mask(mask, 7))).epsilon(1e-10));
  });
  CHECK(visits == 128);
}

TEST_CASE("metropolis at infinite temperature") {
  RngStream r(7, "beta0");
  const GaussianTensor j = gen_gaussian_tensor(30, 2, r);
  const ChainSummary chain = metropolis_chain(j, BetaSchedule::constant(0.0), 2000, r);
  CHECK(chain.acceptance_rate == 1.0);
  double mean = 0.0;
  for (double e : chain.energy_trace) mean += e;
  mean /= static_cast<double>(chain.energy_trace.size());
  // Per-sweep energies are close to independent at beta = 0; sd of one draw is
  // sqrt(C(n,2)) n^{-3/2}.
  const double sd = std::sqrt(435.0) * std::pow(30.0, -1.5) / std::sqrt(2000.0);
  CHECK(std::abs(mean) <= 4.0 * sd);
}

TEST_CASE("metropolis at beta 0 visits states uniformly") {
  RngStream r(8, "uniform");
  const GaussianTensor j = gen_gaussian_tensor(4, 2, r);
  ChainOptions opts;
  opts.record_state_histogram = true;
  const ChainSummary chain = metropolis_chain(j, BetaSchedule::constant(0.0), 20000, r, opts);
  REQUIRE(chain.state_histogram.size() == 16);
  double total = 0.0;
  for (auto c : chain.state_histogram) total += static_cast<double>(c);
  double stat = 0.0;
  for (auto c : chain.state_histogram) stat += (c - total / 16) * (c - total / 16) / (total / 16);
  // Consecutive visits are correlated; each proposal moves the state, so use a
  // thinned effective sample size of one visit per sweep.
  CHECK(stat / 4.0 <= teststats::chi_square_critical_01(15));
}

TEST_CASE("metropolis transition matrix satisfies detailed balance") {
  RngStream r(9, "balance");
  const std::uint32_t n = 3;
  const GaussianTensor j = gen_gaussian_tensor(n, 2, r);
  const double beta = 1.7;
  std::vector<double> e(8);
  for (std::uint64_t m = 0; m < 8; ++m) e[m] = energy(j, config_from_mask(m, n));
  double z = 0.0;
  for (double v : e) z += std::exp(beta * n * v);
  for (std::uint64_t a = 0; a < 8; ++a) {
    for (std::uint32_t i = 0; i < n; ++i) {
      const std::uint64_t b = a ^ (std::uint64_t{1} << i);
      const double pab = metropolis_accept_probability(beta, n, e[b] - e[a]) / n;
      const double pba = metropolis_accept_probability(beta, n, e[a] - e[b]) / n;
      const double lhs = std::exp(beta * n * e[a]) / z * pab;
      const double rhs = std::exp(beta * n * e[b]) / z * pba;
      CHECK(std::abs(lhs - rhs) <= 1e-12);
    }
  }
}

TEST_CASE("annealed metropolis finds small ground states") {
  const RngStream root(10, "anneal");
  int hits = 0;
  for (int s = 0; s < 30; ++s) {
    RngStream r = root.child(s);
    const GaussianTensor j = gen_gaussian_tensor(12, 2, r);
    const double best = brute_force_ground_state(j).energy;
    const ChainSummary chain = metropolis_chain(j, {0.0, 4.0}, 400, r);
    if (chain.best_energy >= best - 1e-12) ++hits;
  }
  CHECK(hits >= 27);
}

TEST_CASE("guided walk contracts") {
  const RngStream root(11, "walk");
  for (int s = 0; s < 50; ++s) {
    RngStream r = root.child(s);
    const GaussianTensor j = gen_gaussian_tensor(200, 2, r);
    WalkOptions opts;
    opts.record_steps = s < 5;
    const WalkResult w = guided_walk(j, r, opts);
    CHECK(is_spin_config(w.config));
    CHECK(w.energy == doctest::Approx(energy(j, w.config)).epsilon(1e-12));
    for (double x : w.relaxed.point) CHECK(std::abs(x) <= 1.0);
    double prev = -INFINITY;
    bool monotone = true;
    for (const auto& rec : w.trace) {
      monotone = monotone && rec.energy >= prev - 1e-9;
      prev = rec.energy;
    }
    CHECK(monotone);
    for (std::size_t t = 1; t < w.steps.size(); ++t) {
      double dot = 0, na = 0, nb = 0;
      for (std::size_t i = 0; i < 200; ++i) {
        dot += w.steps[t][i] * w.steps[t - 1][i];
        na += w.steps[t][i] * w.steps[t][i];
        nb += w.steps[t - 1][i] * w.steps[t - 1][i];
      }
      CHECK(std::abs(dot) <= 1e-8 * std::sqrt(na * nb) + 1e-300);
    }
  }
}

TEST_CASE("guided walk on a zero tensor stalls with a partial trajectory") {
  RngStream r(12, "stall");
  const GaussianTensor zero = tensor(4, 2, std::vector<double>(6, 0.0));
  try {
    (void)guided_walk(zero, r);
    FAIL("expected a stalled walk");
  } catch (const StalledWalkError& e) {
    CHECK(e.partial().relaxed.point.size() == 4);
  }
}

TEST_CASE("overlap identities") {
  RngStream r(13, "overlap");
  const SpinConfig a = random_config(40, r);
  SpinConfig neg = a;
  for (auto& v : neg) v = static_cast<std::int8_t>(-v);
  CHECK(overlap(a, a) == 1.0);
  CHECK(overlap(a, neg) == -1.0);
  SpinConfig b = a;
  for (int i = 0; i < 7; ++i) b[i * 5] = static_cast<std::int8_t>(-b[i * 5]);
  CHECK(hamming_distance(a, b) == 7);
  CHECK(overlap(a, b) == doctest::Approx(1.0 - 2.0 * 7 / 40));
  CHECK_THROWS_AS(overlap(a, SpinConfig(3, 1)), ParameterError);
}

TEST_CASE("walk trace csv") {
  std::ostringstream out;
  write_walk_trace_csv(out, {{0, 0.0, 0, false}, {1, 0.25, 3, false}});
  CHECK(out.str() == "step,energy,frozen_count\r\n0,0,0\r\n1,0.25,3\r\n");
}
