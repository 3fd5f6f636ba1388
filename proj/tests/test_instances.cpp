#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "frozen_values.hpp"
#include "randopt/combinatorics.hpp"
#include "randopt/error.hpp"
#include "randopt/instance_io.hpp"
#include "randopt/instances.hpp"
#include "randopt/interpolation.hpp"
#include "stats.hpp"

using namespace randopt;

TEST_CASE("graph generator edge cases") {
  RngStream r(1, "g");
  const ErGraph tri = gen_er_graph(3, 1.0, r);
  CHECK(tri.edge_count() == 3);
  const ErGraph empty = gen_er_graph(5, 0.0, r);
  CHECK(empty.edge_count() == 0);
  CHECK_THROWS_AS(gen_er_graph(5, 1.5, r), ParameterError);
  CHECK_THROWS_AS(gen_er_graph(5, -0.1, r), ParameterError);
}

TEST_CASE("graph adjacency is symmetric without loops") {
  RngStream r(2, "g");
  const ErGraph g = gen_er_graph(70, 0.5, r);
  std::uint64_t count = 0;
  for (std::uint32_t i = 0; i < g.n(); ++i) {
    CHECK_FALSE(g.has_edge(i, i));
    for (std::uint32_t j = 0; j < g.n(); ++j) {
      CHECK(g.has_edge(i, j) == g.has_edge(j, i));
      if (i < j && g.has_edge(i, j)) ++count;
    }
  }
  CHECK(count == g.edge_count());
}

TEST_CASE("edge counts of G(1000, 1/2) concentrate") {
  const double pairs = 1000.0 * 999.0 / 2.0;
  const double sd = std::sqrt(pairs * 0.25);
  int excursions = 0;
  const RngStream root(3, "er1000");
  for (int s = 0; s < 100; ++s) {
    RngStream r = root.child(s);
    const ErGraph g = gen_er_graph(1000, 0.5, r);
    if (std::abs(static_cast<double>(g.edge_count()) - pairs / 2.0) > 4.0 * sd) ++excursions;
  }
  CHECK(excursions <= 1);
}

TEST_CASE("sparse graph uses d / n") {
  RngStream r(4, "sparse");
  const ErGraph g = gen_sparse_graph(400, 5.0, r);
  CHECK(g.edge_prob() == doctest::Approx(5.0 / 400.0));
  REQUIRE(g.avg_degree().has_value());
  CHECK(*g.avg_degree() == 5.0);
}

TEST_CASE("gaussian tensor sizes and moments") {
  RngStream r(5, "tensor");
  CHECK(gen_gaussian_tensor(2, 2, r).entries.size() == 1);
  CHECK(gen_gaussian_tensor(10, 3, r).entries.size() == 120);
  CHECK_THROWS_AS(gen_gaussian_tensor(3, 4, r), ParameterError);
  RngStream fixed(2024, "tensor/moments");
  const GaussianTensor j = gen_gaussian_tensor(50, 2, fixed);
  REQUIRE(j.entries.size() == 1225);
  double s = 0, s2 = 0;
  for (double x : j.entries) {
    s += x;
    s2 += x * x;
  }
  const double mean = s / 1225.0;
  const double var = s2 / 1225.0 - mean * mean;
  CHECK(std::abs(mean) <= 4.0 / std::sqrt(1225.0));
  CHECK(var >= 0.85);
  CHECK(var <= 1.15);
}

TEST_CASE("k-sat generator") {
  RngStream r(6, "ksat");
  const KSatFormula one = gen_ksat(3, 1, 3, r);
  std::set<std::uint32_t> vars;
  for (auto l : one.clause(0)) vars.insert(l.var());
  CHECK(vars == std::set<std::uint32_t>{1, 2, 3});
  CHECK(gen_ksat(10, 0, 3, r).m() == 0);
  CHECK_THROWS_AS(gen_ksat(2, 1, 3, r), ParameterError);

  RngStream fixed(77, "ksat/negations");
  const KSatFormula f = gen_ksat(10, 10000, 3, fixed);
  std::size_t neg = 0;
  for (auto l : f.literals) neg += l.negated();
  const double frac = static_cast<double>(neg) / static_cast<double>(f.literals.size());
  CHECK(frac >= 0.49);
  CHECK(frac <= 0.51);
  for (std::size_t c = 0; c < f.m(); ++c) {
    std::set<std::uint32_t> v;
    for (auto l : f.clause(c)) {
      CHECK(l.var() >= 1);
      CHECK(l.var() <= 10);
      v.insert(l.var());
    }
    CHECK(v.size() == 3);
  }
}

TEST_CASE("generators are pure functions of seed and label") {
  RngStream a(9, "same"), b(9, "same"), c(9, "other");
  const ErGraph ga = gen_er_graph(40, 0.5, a);
  const ErGraph gb = gen_er_graph(40, 0.5, b);
  const ErGraph gc = gen_er_graph(40, 0.5, c);
  CHECK(ga == gb);
  CHECK(content_hash(ga) == content_hash(gb));
  CHECK(content_hash(ga) != content_hash(gc));
}

TEST_CASE("instance round trips") {
  RngStream r(10, "io");
  const std::vector<Instance> all = {gen_er_graph(33, 0.5, r), gen_er_graph(1, 0.5, r), gen_gaussian_tensor(9, 3, r),
                                     gen_ksat(12, 40, 3, r), gen_ksat(5, 0, 2, r)};
  for (const auto& inst : all) {
    const auto bytes = encode_instance(inst);
    CHECK(decode_instance(bytes) == inst);
  }
}

TEST_CASE("instance parse errors are distinct") {
  RngStream r(11, "io");
  const auto bytes = encode_instance(gen_er_graph(12, 0.5, r));
  auto kind_of_error = [](std::vector<std::uint8_t> b) {
    try {
      (void)decode_instance(b);
    } catch (const ParseError& e) {
      return e.kind();
    }
    FAIL("no parse error");
    return ParseErrorKind::kMalformed;
  };
  auto bad_magic = bytes;
  bad_magic[0] ^= 0xFF;
  CHECK(kind_of_error(bad_magic) == ParseErrorKind::kCorruptHeader);
  auto bad_version = bytes;
  bad_version[8] = 0x7F;
  CHECK(kind_of_error(bad_version) == ParseErrorKind::kVersionMismatch);
  auto truncated = bytes;
  truncated.resize(truncated.size() - 3);
  CHECK(kind_of_error(truncated) == ParseErrorKind::kTruncated);
  try {
    (void)decode_instance_as<KSatFormula>(bytes);
    FAIL("expected a type mismatch");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ParseErrorKind::kTypeMismatch);
  }
  auto flipped = bytes;
  flipped[10] = 3;  // graph payload under a formula tag
  CHECK_THROWS_AS((void)decode_instance(flipped), ParseError);
}

TEST_CASE("dimacs round trip") {
  RngStream r(12, "dimacs");
  const KSatFormula f = gen_ksat(20, 50, 3, r);
  std::stringstream ss;
  write_dimacs(ss, f);
  const KSatFormula back = read_dimacs(ss);
  CHECK(back.n == f.n);
  CHECK(back.literals == f.literals);
}

TEST_CASE("interpolation path endpoints") {
  RngStream r(13, "path");
  const ErGraph base = gen_er_graph(20, 0.5, r);
  const InterpolationPath path(base, RngStream(13, "path/steps"));
  CHECK(path.length() == 190);
  CHECK(encode_instance(path.instance_at(0)) == encode_instance(Instance(base)));
  CHECK_THROWS_AS((void)path.instance_at(191), ParameterError);

  // Units outside the applied prefix are untouched.
  const Instance mid_inst = path.instance_at(50);
  const auto& mid = std::get<ErGraph>(mid_inst);
  std::set<std::uint64_t> applied(path.unit_order().begin(), path.unit_order().begin() + 50);
  for (std::uint64_t u = 0; u < 190; ++u) {
    if (applied.count(u)) continue;
    const auto [i, j] = pair_from_index(u);
    CHECK(mid.has_edge(i, j) == base.has_edge(i, j));
  }

  // Incremental walking agrees with direct evaluation.
  path.for_each_instance(37, [&](std::uint64_t t, const Instance& inst) {
    CHECK(encode_instance(inst) == encode_instance(path.instance_at(t)));
  });
}

TEST_CASE("interpolated sparse graphs keep the binomial edge-count law") {
  const std::uint32_t n = 20;
  const double d = 4.0;
  const std::uint64_t pairs = n * (n - 1) / 2;
  std::vector<std::uint64_t> counts;
  const RngStream root(14, "path-law");
  for (int s = 0; s < 500; ++s) {
    RngStream g = root.child(s).child("base");
    const InterpolationPath path(gen_sparse_graph(n, d, g), root.child(s).child("steps"));
    counts.push_back(std::get<ErGraph>(path.instance_at(pairs / 3)).edge_count());
  }
  const auto chi = teststats::binomial_gof(counts, pairs, d / n);
  CHECK(chi.p_value > 0.01);
}

TEST_CASE("other instance kinds interpolate") {
  RngStream r(15, "kinds");
  const GaussianTensor j = gen_gaussian_tensor(6, 3, r);
  const InterpolationPath pj(j, RngStream(15, "kinds/j"));
  CHECK(pj.length() == 20);
  const Instance end_inst = pj.instance_at(20);
  const auto& end = std::get<GaussianTensor>(end_inst);
  for (std::size_t i = 0; i < 20; ++i) CHECK(end.entries[i] != j.entries[i]);

  const KSatFormula f = gen_ksat(10, 30, 3, r);
  const InterpolationPath pf(f, RngStream(15, "kinds/f"));
  CHECK(pf.length() == 30);
  CHECK(std::get<KSatFormula>(pf.instance_at(0)) == f);
}

TEST_CASE("frozen first-moment constants are consistent") {
  CHECK(frozen::kExpectedNineCliquesG64 == doctest::Approx(static_cast<double>(binomial(64, 9)) / std::pow(2.0, 36)));
}
