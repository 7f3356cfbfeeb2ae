#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "spkn/tensor.hpp"

namespace spkn {

/// First-spike time of every neuron in a map, or kSilent. A neuron fires at
/// most once per presentation, so one slot per neuron is the whole spike train.
class LatencyMap {
 public:
  using Time = std::int16_t;
  static constexpr Time kSilent = -1;

  LatencyMap() = default;
  LatencyMap(Shape shape, int steps);  // all silent
  LatencyMap(Shape shape, int steps, std::vector<Time> times);

  const Shape& shape() const noexcept { return shape_; }
  int steps() const noexcept { return steps_; }
  std::size_t size() const noexcept { return times_.size(); }
  const std::vector<Time>& times() const noexcept { return times_; }

  Time operator[](std::size_t i) const { return times_[i]; }
  bool fired(std::size_t i) const { return times_[i] != kSilent; }
  void set(std::size_t i, Time t);
  std::size_t fired_count() const;

  friend bool operator==(const LatencyMap& a, const LatencyMap& b) = default;

 private:
  Shape shape_;
  int steps_ = 1;
  std::vector<Time> times_;
};

/// Rank-order code: the N non-zero values, sorted descending with ties broken
/// by ascending flat index, fire at t = floor(rank * steps / N). Zeros stay
/// silent.
LatencyMap rank_order_encode(const Tensor& features, int steps);

/// steps - t for fired neurons, 0 for silent ones. Keeps the map's shape.
Tensor timed_readout(const LatencyMap& map);

/// Time-unrolled view, shape [steps, ...map shape]; bit (t, n) is set iff
/// neuron n fires at t.
PackedBits raster(const LatencyMap& map);

/// Inverse of raster(): the earliest set plane of every neuron.
LatencyMap first_spikes(const PackedBits& raster);

}  // namespace spkn
