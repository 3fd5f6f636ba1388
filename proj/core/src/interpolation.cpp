#include "randopt/interpolation.hpp"

#include <numeric>

#include "randopt/error.hpp"

namespace randopt {

InterpolationPath::InterpolationPath(Instance base, RngStream rng) : base_(std::move(base)), rng_(std::move(rng)) {
  unit_order_.resize(resampling_units(base_));
  std::iota(unit_order_.begin(), unit_order_.end(), std::uint64_t{0});
  RngStream order_rng = rng_.child("order");
  shuffle_indices(unit_order_.data(), unit_order_.size(), order_rng);
}

void InterpolationPath::apply_step(Instance& current, std::uint64_t t) const {
  if (t < 1 || t > length()) throw ParameterError("interpolation step out of range");
  RngStream step_rng = rng_.child(t);
  resample_unit(current, unit_order_[t - 1], step_rng);
}

Instance InterpolationPath::instance_at(std::uint64_t t) const {
  if (t > length()) throw ParameterError("interpolation position exceeds path length");
  Instance current = base_;
  for (std::uint64_t s = 1; s <= t; ++s) apply_step(current, s);
  return current;
}

void InterpolationPath::for_each_instance(std::uint64_t stride,
                                          const std::function<void(std::uint64_t, const Instance&)>& visit) const {
  if (stride == 0) throw ParameterError("stride must be positive");
  Instance current = base_;
  visit(0, current);
  for (std::uint64_t t = 1; t <= length(); ++t) {
    apply_step(current, t);
    if (t % stride == 0 || t == length()) visit(t, current);
  }
}

}  // namespace randopt
