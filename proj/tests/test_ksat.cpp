#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "frozen_values.hpp"
#include "randopt/error.hpp"
#include "oracles.hpp"
#include "randopt/ksat.hpp"

using namespace randopt;

namespace {

KSatFormula formula(std::uint32_t n, std::uint32_t k, std::initializer_list<int> dimacs) {
  KSatFormula f;
  f.n = n;
  f.k = k;
  for (int d : dimacs) f.literals.emplace_back(static_cast<std::uint32_t>(std::abs(d)), d < 0);
  return f;
}

KSatFormula example_phi() { return formula(10, 3, {3, -7, -8, -1, -2, 7, -3, -7, -9}); }

Assignment from_mask(std::uint64_t mask, std::uint32_t n) {
  Assignment a(n);
  for (std::uint32_t i = 0; i < n; ++i) a[i] = (mask >> i) & 1U;
  return a;
}

}  // namespace

TEST_CASE("clause evaluation on the worked example") {
  const KSatFormula phi = example_phi();
  const RngStream root(1, "phi");
  for (int s = 0; s < 64; ++s) {
    RngStream r = root.child(s);
    Assignment a(10);
    for (auto& v : a) v = r.bernoulli(0.5);
    a[1] = 0;
    a[2] = 1;
    a[8] = 0;
    CHECK(eval_clauses(phi, a) == 3);
  }
  CHECK(satisfies(formula(4, 3, {}), Assignment(4, 0)));
  CHECK_THROWS_AS(eval_clauses(phi, Assignment(3, 0)), ParameterError);
}

TEST_CASE("random assignments satisfy 7/8 of 3-clauses") {
  RngStream r(2, "frac");
  double sum = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const KSatFormula f = gen_ksat(20, 10, 3, r);
    Assignment a(20);
    for (auto& v : a) v = r.bernoulli(0.5);
    sum += static_cast<double>(eval_clauses(f, a)) / 10.0;
  }
  CHECK(std::abs(sum / 10000.0 - 0.875) <= 0.01);
}

TEST_CASE("dpll basics") {
  CHECK(dpll_solve(formula(1, 1, {1, -1})).status == SatStatus::kUnsat);
  const DpllResult r = dpll_solve(example_phi());
  REQUIRE(r.status == SatStatus::kSat);
  CHECK(satisfies(example_phi(), r.assignment));
  RngStream g(3, "budget");
  DpllOptions tiny;
  tiny.node_budget = 1;
  CHECK_THROWS_AS(dpll_solve(gen_ksat(60, 260, 3, g), tiny), BudgetError);
}

TEST_CASE("dpll verdicts match exhaustive enumeration") {
  const RngStream root(4, "dpll-oracle");
  for (int s = 0; s < 500; ++s) {
    RngStream r = root.child(s);
    const auto n = static_cast<std::uint32_t>(3 + r.below(18));
    const double c = 2.0 + 4.0 * r.uniform();
    const KSatFormula f = gen_ksat(n, static_cast<std::size_t>(std::lround(c * n)), 3, r);
    const DpllResult d = dpll_solve(f);
    const bool sat = oracles::brute_sat_count(f) > 0;
    CHECK((d.status == SatStatus::kSat) == sat);
    if (d.status == SatStatus::kSat) CHECK(satisfies(f, d.assignment));
  }
}

TEST_CASE("walksat basics") {
  RngStream r(5, "walk");
  const WalkSatResult unit = walksat(formula(1, 1, {1}), r);
  CHECK(unit.found);
  CHECK(unit.flips <= 1);
  WalkSatOptions few;
  few.max_flips = 1000;
  CHECK_FALSE(walksat(formula(1, 1, {1, -1}), r, few).found);
  WalkSatOptions bad;
  bad.noise = 1.5;
  CHECK_THROWS_AS(walksat(example_phi(), r, bad), ParameterError);
}

TEST_CASE("walksat solves easy random 3-sat") {
  const RngStream root(6, "walk-easy");
  int found = 0;
  for (int s = 0; s < 100; ++s) {
    RngStream r = root.child(s);
    const KSatFormula f = gen_ksat(150, 450, 3, r);
    const WalkSatResult w = walksat(f, r);
    if (w.found) {
      CHECK(satisfies(f, w.assignment));
      ++found;
    }
  }
  CHECK(found >= 95);
}

TEST_CASE("solution enumeration") {
  const auto two = enumerate_solutions(formula(2, 2, {1, 2}));
  REQUIRE(two.size() == 3);
  std::set<std::uint64_t> masks;
  for (const auto& a : two) masks.insert(assignment_mask(a));
  CHECK(masks == std::set<std::uint64_t>{1, 2, 3});
  CHECK(enumerate_solutions(formula(1, 1, {1, -1})).empty());
  CHECK(enumerate_solutions(formula(3, 1, {})).size() == 8);
  RngStream r(7, "cap");
  CHECK_THROWS_AS(enumerate_solutions(gen_ksat(31, 10, 3, r)), CapacityError);
}

TEST_CASE("enumeration counts match brute force") {
  const RngStream root(8, "enum-oracle");
  for (int s = 0; s < 200; ++s) {
    RngStream r = root.child(s);
    const auto n = static_cast<std::uint32_t>(3 + r.below(14));
    const KSatFormula f = gen_ksat(n, static_cast<std::size_t>(r.below(5 * n)), 3, r);
    const auto sols = enumerate_solutions(f);
    CHECK(sols.size() == oracles::brute_sat_count(f));
    std::uint64_t prev = 0;
    for (std::size_t i = 0; i < sols.size(); ++i) {
      CHECK(satisfies(f, sols[i]));
      if (i > 0) CHECK(assignment_mask(sols[i]) > prev);
      prev = assignment_mask(sols[i]);
    }
  }
}

TEST_CASE("first-moment calculators") {
  const double zero[] = {0.0};
  CHECK(sat_moment_curve(17, 3, zero)[0].log_expected_solutions == doctest::Approx(17 * std::log(2.0)));
  const double c85[] = {85.0 / 20.0};
  CHECK(sat_moment_curve(20, 3, c85)[0].log_expected_solutions ==
        doctest::Approx(frozen::kSatLogExpectedN20M85K3).epsilon(1e-5));
  CHECK(first_moment_density(2) == doctest::Approx(frozen::kSatFirstMomentDensityK2).epsilon(1e-5));
  CHECK(first_moment_density(3) == doctest::Approx(frozen::kSatFirstMomentDensityK3).epsilon(1e-6));
  CHECK(first_moment_density(4) == doctest::Approx(frozen::kSatFirstMomentDensityK4).epsilon(1e-6));
  CHECK(first_moment_density(5) == doctest::Approx(frozen::kSatFirstMomentDensityK5).epsilon(1e-6));
  double prev = 0.0;
  for (std::uint32_t k = 3; k <= 12; ++k) {
    const double ratio = first_moment_density(k) / (std::ldexp(1.0, static_cast<int>(k)) * std::log(2.0));
    CHECK(ratio < 1.0);
    CHECK(ratio > prev);
    prev = ratio;
  }
}

TEST_CASE("sat curve is deterministic across job counts and decreasing") {
  const std::vector<double> densities = {3.0, 4.0, 4.5, 5.0, 6.0};
  SatCurveOptions opts;
  opts.n = 40;
  opts.trials = 40;
  const RngStream root(9, "curve");
  const auto a = sat_curve(densities, opts, root);
  opts.jobs = 3;
  const auto b = sat_curve(densities, opts, root);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].satisfied == b[i].satisfied);
    CHECK(a[i].sat_fraction == doctest::Approx(static_cast<double>(a[i].satisfied) / a[i].trials));
  }
  const SlopeFit fit = fit_sat_slope(a);
  CHECK(fit.slope + 1.645 * fit.slope_stderr <= 0.0);
  const auto half = half_crossing(a);
  REQUIRE(half.has_value());
  CHECK(*half > 3.0);
  CHECK(*half < 6.0);
  std::ostringstream out;
  write_sat_curve_csv(out, a);
  CHECK(out.str().rfind("density,trials,sat_fraction\r\n", 0) == 0);
}

TEST_CASE("dpll without pure literals is still complete") {
  const RngStream root(10, "nopure");
  DpllOptions opts;
  opts.pure_literals = false;
  for (int s = 0; s < 50; ++s) {
    RngStream r = root.child(s);
    const KSatFormula f = gen_ksat(14, 60, 3, r);
    CHECK((dpll_solve(f, opts).status == SatStatus::kSat) == (oracles::brute_sat_count(f) > 0));
  }
}

TEST_CASE("bitmask oracle agrees with clause evaluation") {
  const RngStream root(11, "mask-oracle");
  for (int s = 0; s < 20; ++s) {
    RngStream r = root.child(s);
    const KSatFormula f = gen_ksat(9, 30, 3, r);
    std::uint64_t c = 0;
    for (std::uint64_t m = 0; m < 512; ++m) c += satisfies(f, from_mask(m, 9));
    CHECK(c == oracles::brute_sat_count(f));
  }
}
