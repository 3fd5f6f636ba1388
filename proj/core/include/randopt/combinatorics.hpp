#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace randopt {

/// Exact binomial coefficient; throws ParameterError on 64-bit overflow.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

/// log C(n, k) via lgamma; valid for large n.
double log_binomial(double n, double k);

/// Colexicographic rank of a strictly increasing 0-based tuple:
/// rank(i_1 < ... < i_p) = sum_k C(i_k, k).
std::uint64_t colex_rank(std::span<const std::uint32_t> tuple);

/// Inverse of colex_rank for tuples of length p.
std::vector<std::uint32_t> colex_unrank(std::uint64_t rank, std::uint32_t p);

/// Advances `tuple` to its colex successor among p-subsets of [0, n).
/// Returns false after the last tuple.
bool next_colex(std::span<std::uint32_t> tuple, std::uint32_t n);

/// Calls f(tuple, rank) for every p-subset of [0, n) in colex order.
template <class F>
void for_each_tuple(std::uint32_t n, std::uint32_t p, F&& f) {
  if (p > n) return;
  std::vector<std::uint32_t> tuple(p);
  for (std::uint32_t k = 0; k < p; ++k) tuple[k] = k;
  std::uint64_t rank = 0;
  do {
    f(std::span<const std::uint32_t>(tuple), rank);
    ++rank;
  } while (next_colex(tuple, n));
}

}  // namespace randopt
