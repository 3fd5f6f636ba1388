#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace randopt {

/// Deterministic, splittable random stream.
///
/// A stream is identified by a 64-bit seed and a text label such as
/// "ksat/clause/17". The pair is hashed into a 256-bit xoshiro256** state, so
/// the same (seed, label) always produces the same sequence and substreams can
/// be derived in any order. Distributions are implemented here, not via <random>.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::string label);

  std::uint64_t seed() const noexcept { return seed_; }
  const std::string& label() const noexcept { return label_; }

  /// Substream with label "<label>/<name>".
  RngStream child(std::string_view name) const;
  /// Substream with label "<label>/<index>".
  RngStream child(std::uint64_t index) const;

  std::uint64_t next_u64() noexcept;
  std::uint64_t operator()() noexcept { return next_u64(); }
  static constexpr std::uint64_t min() noexcept { return 0; }
  static constexpr std::uint64_t max() noexcept { return ~std::uint64_t{0}; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform integer on [0, bound); bound must be positive.
  std::uint64_t below(std::uint64_t bound) noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }
  /// Standard normal (Marsaglia polar method).
  double normal() noexcept;

 private:
  RngStream(std::uint64_t seed, std::string label, std::uint64_t key);
  void reset_state(std::uint64_t key) noexcept;

  std::uint64_t seed_;
  std::string label_;
  std::uint64_t key_;
  std::array<std::uint64_t, 4> state_{};
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// 64-bit FNV-1a; used to fold labels into stream keys.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Fisher-Yates shuffle of 0..n-1 drawn from the stream.
template <class Index>
void shuffle_indices(Index* first, std::size_t n, RngStream& rng) {
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    Index tmp = first[i - 1];
    first[i - 1] = first[j];
    first[j] = tmp;
  }
}

}  // namespace randopt
