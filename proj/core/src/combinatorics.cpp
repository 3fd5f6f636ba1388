#include "randopt/combinatorics.hpp"

#include <cmath>

#include "randopt/error.hpp"

namespace randopt {

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  __uint128_t result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    result = result * (n - k + i) / i;
    if (result > ~std::uint64_t{0}) throw ParameterError("binomial coefficient overflows 64 bits");
  }
  return static_cast<std::uint64_t>(result);
}

double log_binomial(double n, double k) {
  if (k < 0 || k > n) return -INFINITY;
  return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1);
}

std::uint64_t colex_rank(std::span<const std::uint32_t> tuple) {
  std::uint64_t rank = 0;
  for (std::size_t k = 0; k < tuple.size(); ++k) {
    if (k > 0 && tuple[k] <= tuple[k - 1]) throw ParameterError("tuple is not strictly increasing");
    rank += binomial(tuple[k], k + 1);
  }
  return rank;
}

std::vector<std::uint32_t> colex_unrank(std::uint64_t rank, std::uint32_t p) {
  std::vector<std::uint32_t> tuple(p);
  for (std::uint32_t k = p; k >= 1; --k) {
    // largest c with C(c, k) <= rank
    std::uint32_t c = k - 1;
    while (binomial(c + 1, k) <= rank) ++c;
    tuple[k - 1] = c;
    rank -= binomial(c, k);
  }
  return tuple;
}

bool next_colex(std::span<std::uint32_t> tuple, std::uint32_t n) {
  const std::size_t p = tuple.size();
  for (std::size_t k = 0; k < p; ++k) {
    const std::uint32_t limit = (k + 1 < p) ? tuple[k + 1] : n;
    if (tuple[k] + 1 < limit) {
      ++tuple[k];
      for (std::size_t j = 0; j < k; ++j) tuple[j] = static_cast<std::uint32_t>(j);
      return true;
    }
  }
  return false;
}

}  // namespace randopt
