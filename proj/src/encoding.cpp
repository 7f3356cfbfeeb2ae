#include "spkn/encoding.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace spkn {

namespace {

void check_steps(int steps) {
  if (steps < 1 || steps > 32767) {
    throw std::invalid_argument("time steps must be in [1, 32767]");
  }
}

}  // namespace

LatencyMap::LatencyMap(Shape shape, int steps)
    : shape_(std::move(shape)), steps_(steps), times_(shape_size(shape_), kSilent) {
  check_steps(steps);
}

LatencyMap::LatencyMap(Shape shape, int steps, std::vector<Time> times)
    : shape_(std::move(shape)), steps_(steps), times_(std::move(times)) {
  check_steps(steps);
  if (times_.size() != shape_size(shape_)) {
    throw std::invalid_argument("latency map length does not match its shape");
  }
  for (Time t : times_) {
    if (t != kSilent && (t < 0 || t >= steps_)) {
      throw std::invalid_argument("spike time " + std::to_string(t) + " outside [0," +
                                  std::to_string(steps_) + ")");
    }
  }
}

void LatencyMap::set(std::size_t i, Time t) {
  if (t != kSilent && (t < 0 || t >= steps_)) {
    throw std::invalid_argument("spike time outside the window");
  }
  times_[i] = t;
}

std::size_t LatencyMap::fired_count() const {
  return static_cast<std::size_t>(
      std::count_if(times_.begin(), times_.end(), [](Time t) { return t != kSilent; }));
}

LatencyMap rank_order_encode(const Tensor& features, int steps) {
  check_steps(steps);
  const auto values = features.data();
  std::vector<std::size_t> order;
  order.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 0.0) {
      throw std::invalid_argument("rank_order_encode: negative feature at index " +
                                  std::to_string(i));
    }
    if (values[i] > 0.0) order.push_back(i);
  }
  // Indices are already ascending, so a stable sort keeps index order on ties.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  LatencyMap out(features.shape(), steps);
  const std::size_t n = order.size();
  for (std::size_t r = 0; r < n; ++r) {
    out.set(order[r], static_cast<LatencyMap::Time>(r * static_cast<std::size_t>(steps) / n));
  }
  return out;
}

Tensor timed_readout(const LatencyMap& map) {
  Tensor out(map.shape());
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map.fired(i)) out[i] = static_cast<double>(map.steps() - map[i]);
  }
  return out;
}

PackedBits raster(const LatencyMap& map) {
  Shape shape{static_cast<std::size_t>(map.steps())};
  shape.insert(shape.end(), map.shape().begin(), map.shape().end());
  PackedBits bits(shape);
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map.fired(i)) bits.set(static_cast<std::size_t>(map[i]) * map.size() + i, true);
  }
  return bits;
}

LatencyMap first_spikes(const PackedBits& raster) {
  if (raster.shape().empty()) {
    throw std::invalid_argument("raster needs a leading time axis");
  }
  const Shape shape(raster.shape().begin() + 1, raster.shape().end());
  const int steps = static_cast<int>(raster.shape().front());
  LatencyMap out(shape, steps);
  const std::size_t n = out.size();
  for (int t = steps - 1; t >= 0; --t) {
    for (std::size_t i = 0; i < n; ++i) {
      if (raster.get(static_cast<std::size_t>(t) * n + i)) {
        out.set(i, static_cast<LatencyMap::Time>(t));
      }
    }
  }
  return out;
}

}  // namespace spkn
