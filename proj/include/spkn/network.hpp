#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "spkn/encoding.hpp"
#include "spkn/tensor.hpp"

namespace spkn {

struct ConvLayerConfig {
  std::size_t out_channels = 1;
  std::size_t window = 1;
  std::size_t stride = 1;
  std::size_t pad = 0;
  double threshold = 1.0;

  void validate() const;
};

struct NetworkConfig {
  ConvLayerConfig layer1;
  std::size_t pool1_window = 2;
  ConvLayerConfig layer2;
  std::size_t pool2_window = 3;
  int steps = 15;

  /// "small" (50/100), "medium" (100/200) or "large" (200/400) channels with
  /// the 5x5/pad 2 and 3x3/pad 1 geometry and pools of 2 and 3.
  static NetworkConfig preset(std::string_view name);
  void validate() const;
};

struct IfOutput {
  LatencyMap spikes;   // [K,H',W']
  Tensor potentials;   // [K,H',W'], frozen at the firing step for fired neurons
};

/// Non-leaky integrate-and-fire convolution over a rank-order input.
///
/// At each step t every neuron adds the convolution of the input spikes
/// emitted at t; a neuron whose potential reaches the threshold fires at t
/// and never again. Per-step increments are summed in (c, i, j) order, so the
/// result is bit-identical to materialising the raster and calling
/// convolve2d on every plane.
IfOutput if_conv_forward(const LatencyMap& input, const Tensor& weights,
                         const ConvLayerConfig& cfg);

/// Same forward pass with bit-packed binary weights; per-step increments come
/// from convolve2d_binary.
IfOutput if_conv_forward(const LatencyMap& input, const PackedBits& weights,
                         const ConvLayerConfig& cfg);

/// Earliest spike in each non-overlapping window x window tile, per channel.
/// Trailing partial tiles are dropped.
LatencyMap spike_pool(const LatencyMap& input, std::size_t window);

struct Winner {
  std::size_t channel = 0;
  std::size_t y = 0;
  std::size_t x = 0;
  int time = 0;

  friend bool operator==(const Winner&, const Winner&) = default;
};

/// Greedy winner-take-all over fired neurons ordered by (time asc, potential
/// desc, flat index asc). Each accepted winner inhibits its whole channel and
/// every position within Chebyshev distance `inhibition_radius` in all
/// channels.
std::vector<Winner> select_winners(const LatencyMap& spikes, const Tensor& potentials,
                                   std::size_t k, std::size_t inhibition_radius);

}  // namespace spkn
