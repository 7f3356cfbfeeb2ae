#include "spkn/stdp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>

namespace spkn {

void StdpConfig::validate() const {
  if (!(a_plus > 0.0) || !(a_minus < 0.0)) {
    throw std::invalid_argument("stdp: a_plus must be positive and a_minus negative");
  }
  if (!(lower < quantize_at && quantize_at < upper)) {
    throw std::invalid_argument("stdp: need lower < quantize_at < upper");
  }
  if (double_every == 0) {
    throw std::invalid_argument("stdp: double_every must be positive");
  }
  if (!(a_plus <= rate_cap)) {
    throw std::invalid_argument("stdp: a_plus exceeds rate_cap");
  }
}

TrainState TrainState::start(const StdpConfig& cfg, std::size_t layer_index) {
  TrainState s;
  s.layer_index = layer_index;
  s.a_plus = cfg.a_plus;
  s.a_minus = cfg.a_minus;
  return s;
}

double stdp_update(Tensor& weights, const Winner& winner, const LatencyMap& input,
                   const ConvLayerConfig& layer, double a_plus, double a_minus,
                   const StdpConfig& cfg) {
  const std::size_t channels = weights.dim(1), kh = weights.dim(2), kw = weights.dim(3);
  if (winner.channel >= weights.dim(0)) {
    throw std::invalid_argument("stdp_update: winner channel out of range");
  }
  if (input.shape().size() != 3 || input.shape()[0] != channels) {
    throw std::invalid_argument("stdp_update: input does not match the kernel channels");
  }
  const auto h = static_cast<std::ptrdiff_t>(input.shape()[1]);
  const auto w = static_cast<std::ptrdiff_t>(input.shape()[2]);
  const auto y0 = static_cast<std::ptrdiff_t>(winner.y * layer.stride) -
                  static_cast<std::ptrdiff_t>(layer.pad);
  const auto x0 = static_cast<std::ptrdiff_t>(winner.x * layer.stride) -
                  static_cast<std::ptrdiff_t>(layer.pad);
  const double lo = cfg.lower, hi = cfg.upper, q = cfg.quantize_at;
  double* kernel = &weights.data()[winner.channel * channels * kh * kw];
  std::size_t switched = 0;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < kh; ++i) {
      const std::ptrdiff_t y = y0 + static_cast<std::ptrdiff_t>(i);
      for (std::size_t j = 0; j < kw; ++j) {
        const std::ptrdiff_t x = x0 + static_cast<std::ptrdiff_t>(j);
        bool potentiate = false;
        if (y >= 0 && y < h && x >= 0 && x < w) {
          const auto t = input[(c * static_cast<std::size_t>(h) + static_cast<std::size_t>(y)) *
                                   static_cast<std::size_t>(w) +
                               static_cast<std::size_t>(x)];
          potentiate = t != LatencyMap::kSilent && t <= winner.time;
        }
        double& wv = kernel[(c * kh + i) * kw + j];
        const double rate = potentiate ? a_plus : a_minus;
        const double updated = std::clamp(wv + rate * (wv - lo) * (hi - wv), lo, hi);
        if ((wv > q) != (updated > q)) ++switched;
        wv = updated;
      }
    }
  }
  return static_cast<double>(switched) / static_cast<double>(channels * kh * kw);
}

void schedule_step(TrainState& state, const StdpConfig& cfg) {
  ++state.samples_seen;
  if (state.samples_seen % cfg.double_every == 0 && state.a_plus < cfg.rate_cap) {
    const double factor = std::min(2.0, cfg.rate_cap / state.a_plus);
    state.a_plus = std::min(state.a_plus * factor, cfg.rate_cap);
    state.a_minus *= factor;
  }
}

PackedBits quantize(const Tensor& weights, double at) {
  PackedBits bits(weights.shape());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > at) bits.set(i, true);
  }
  return bits;
}

std::vector<double> switch_rate_curve(std::span<const double> history, std::size_t window) {
  if (window == 0 || window % 2 == 0) {
    throw std::invalid_argument("switch_rate_curve: window must be odd");
  }
  const std::size_t n = history.size();
  const std::size_t half = window / 2;
  // Prefix sums keep this linear in the history length.
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + history[i];
  std::vector<double> curve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t reach = std::min({half, i, n - 1 - i});
    const std::size_t lo = i - reach, hi = i + reach + 1;
    curve[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  return curve;
}

bool should_stop(std::span<const double> curve, double epsilon, std::size_t patience) {
  if (patience == 0 || curve.size() < patience) return false;
  return std::all_of(curve.end() - static_cast<std::ptrdiff_t>(patience), curve.end(),
                     [&](double v) { return v < epsilon; });
}

LayerTrainResult train_layer(std::size_t sample_count, const LayerInput& input,
                             std::size_t in_channels, const ConvLayerConfig& layer,
                             std::size_t layer_index, const StdpConfig& cfg,
                             const TrainOptions& options) {
  cfg.validate();
  layer.validate();
  if (options.passes == 0 || options.winners == 0) {
    throw std::invalid_argument("train_layer: passes and winners must be positive");
  }
  if (options.smoothing_window % 2 == 0) {
    throw std::invalid_argument("train_layer: smoothing window must be odd");
  }

  LayerTrainResult result;
  result.weights = Tensor({layer.out_channels, in_channels, layer.window, layer.window});
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> init(options.init_mean, options.init_sd);
  for (double& w : result.weights.data()) w = std::clamp(init(rng), cfg.lower, cfg.upper);
  result.state = TrainState::start(cfg, layer_index);
  TrainState& state = result.state;

  const std::size_t half = options.smoothing_window / 2;
  std::size_t quiet_run = 0;
  double window_sum = 0.0;

  for (std::size_t pass = 0; pass < options.passes && !result.stopped_early; ++pass) {
    for (std::size_t s = 0; s < sample_count; ++s) {
      const LatencyMap in = input(s);
      const IfOutput out = if_conv_forward(in, result.weights, layer);
      const auto winners =
          select_winners(out.spikes, out.potentials, options.winners, options.inhibition_radius);
      for (const Winner& win : winners) {
        const double frac = stdp_update(result.weights, win, in, layer, state.a_plus,
                                        state.a_minus, cfg);
        state.switch_history.push_back(frac);
        state.update_sample.push_back(state.samples_seen);
        state.update_a_plus.push_back(state.a_plus);

        // Smoothed value at the newest point with a complete window.
        const std::size_t n = state.switch_history.size();
        window_sum += frac;
        if (n > options.smoothing_window) {
          window_sum -= state.switch_history[n - 1 - options.smoothing_window];
        }
        if (options.early_stop && n >= options.smoothing_window && state.a_plus >= cfg.rate_cap) {
          const double smoothed = window_sum / static_cast<double>(2 * half + 1);
          quiet_run = smoothed < options.stop_epsilon ? quiet_run + 1 : 0;
          if (quiet_run >= options.stop_patience) result.stopped_early = true;
        }
      }
      schedule_step(state, cfg);
      if (result.stopped_early) break;
    }
  }
  result.binary = quantize(result.weights, cfg.quantize_at);
  return result;
}

void write_training_log(std::ostream& os, const TrainState& state, std::size_t window) {
  const auto curve = switch_rate_curve(state.switch_history, window);
  os << "update,sample,a_plus,switch_fraction,smoothed\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    os << i << ',' << state.update_sample[i] << ',' << state.update_a_plus[i] << ','
       << state.switch_history[i] << ',' << curve[i] << '\n';
  }
}

}  // namespace spkn
