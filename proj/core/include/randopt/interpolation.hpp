#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "randopt/instances.hpp"
#include "randopt/rng.hpp"

namespace randopt {

/// Resampling schedule R_0 -> R_T that redraws one unit (vertex pair, tensor
/// entry or clause) at a time in a seeded random order. Step s (1-based) draws
/// from the substream `<label>/<s>`, so any R_t can be rebuilt independently.
class InterpolationPath {
 public:
  InterpolationPath(Instance base, RngStream rng);

  const Instance& base() const noexcept { return base_; }
  std::uint64_t length() const noexcept { return unit_order_.size(); }
  const std::vector<std::uint64_t>& unit_order() const noexcept { return unit_order_; }
  std::uint64_t seed() const noexcept { return rng_.seed(); }
  const std::string& label() const noexcept { return rng_.label(); }

  /// R_t: units unit_order[0..t) resampled, all others as in the base.
  Instance instance_at(std::uint64_t t) const;

  /// Applies step t (1-based) to an instance currently equal to R_{t-1}.
  void apply_step(Instance& current, std::uint64_t t) const;

  /// Visits R_t for t = 0, stride, 2*stride, ... and always R_T, walking the
  /// path incrementally.
  void for_each_instance(std::uint64_t stride, const std::function<void(std::uint64_t, const Instance&)>& visit) const;

 private:
  Instance base_;
  RngStream rng_;
  std::vector<std::uint64_t> unit_order_;
};

inline InterpolationPath make_interpolation_path(Instance base, RngStream rng) {
  return InterpolationPath(std::move(base), std::move(rng));
}

}  // namespace randopt
