#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "spkn/encoding.hpp"
#include "spkn/network.hpp"
#include "spkn/tensor.hpp"

namespace spkn {

struct StdpConfig {
  double a_plus = 0.0004;
  double a_minus = -0.0003;
  double lower = 0.0;
  double upper = 1.0;
  std::size_t double_every = 2000;
  double rate_cap = 0.15;
  double quantize_at = 0.5;

  void validate() const;
};

struct TrainState {
  std::size_t layer_index = 0;
  std::size_t samples_seen = 0;
  double a_plus = 0.0;
  double a_minus = 0.0;
  // One entry per stdp_update call, in order.
  std::vector<double> switch_history;
  std::vector<std::size_t> update_sample;
  std::vector<double> update_a_plus;

  static TrainState start(const StdpConfig& cfg, std::size_t layer_index);
};

/// Applies one STDP step to the kernel of `winner.channel`.
///
/// For every afferent (c,i,j) of the winner's receptive field, pre-before-or-
/// with-post (t_j <= t_i) uses a_plus, otherwise a_minus; silent and padded
/// afferents count as never firing. dW = a (W-L)(U-W), W' = clamp(W+dW, L, U).
/// Returns the fraction of the receptive field whose weights crossed
/// cfg.quantize_at.
double stdp_update(Tensor& weights, const Winner& winner, const LatencyMap& input,
                   const ConvLayerConfig& layer, double a_plus, double a_minus,
                   const StdpConfig& cfg);

/// Counts one presented sample; every double_every samples both rates double
/// until a_plus reaches rate_cap (the last step is clamped to the cap and
/// a_minus is scaled by the same factor).
void schedule_step(TrainState& state, const StdpConfig& cfg);

/// bit = 1 iff w > at.
PackedBits quantize(const Tensor& weights, double at);

/// Centred moving average; the window shrinks symmetrically at the edges.
std::vector<double> switch_rate_curve(std::span<const double> history, std::size_t window = 11);

/// True when the last `patience` points of the curve are all below epsilon.
bool should_stop(std::span<const double> curve, double epsilon, std::size_t patience);

struct TrainOptions {
  std::size_t passes = 1;
  std::size_t winners = 5;
  std::size_t inhibition_radius = 3;
  double init_mean = 0.5;
  double init_sd = 0.02;
  // Early stopping on the smoothed switch rate, armed once a_plus hit its cap.
  bool early_stop = false;
  double stop_epsilon = 1e-4;
  std::size_t stop_patience = 50;
  std::size_t smoothing_window = 11;
  std::uint64_t seed = 1;
};

struct LayerTrainResult {
  Tensor weights;      // real-valued, [K,C,kh,kw]
  PackedBits binary;   // quantize(weights, cfg.quantize_at)
  TrainState state;
  bool stopped_early = false;
};

/// Produces the training layer's input for sample i (forward through the
/// already-trained prefix).
using LayerInput = std::function<LatencyMap(std::size_t)>;

/// Online layer-wise STDP: for every sample, forward through the layer with
/// the current weights, pick winners, update once per winner, advance the
/// schedule. Weights start from N(init_mean, init_sd) drawn with `seed`.
LayerTrainResult train_layer(std::size_t sample_count, const LayerInput& input,
                             std::size_t in_channels, const ConvLayerConfig& layer,
                             std::size_t layer_index, const StdpConfig& cfg,
                             const TrainOptions& options);

/// CSV: update,sample,a_plus,switch_fraction,smoothed
void write_training_log(std::ostream& os, const TrainState& state, std::size_t window = 11);

}  // namespace spkn
