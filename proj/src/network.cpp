#include "spkn/network.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace spkn {

void ConvLayerConfig::validate() const {
  if (out_channels == 0 || window == 0 || stride == 0) {
    throw std::invalid_argument("conv layer: channels, window and stride must be positive");
  }
  if (!(threshold > 0.0)) {
    throw std::invalid_argument("conv layer: threshold must be positive");
  }
}

NetworkConfig NetworkConfig::preset(std::string_view name) {
  std::size_t c1 = 0;
  if (name == "small") {
    c1 = 50;
  } else if (name == "medium") {
    c1 = 100;
  } else if (name == "large") {
    c1 = 200;
  } else {
    throw std::invalid_argument("unknown network preset '" + std::string(name) + "'");
  }
  NetworkConfig cfg;
  cfg.layer1 = {c1, 5, 1, 2, 15.0};
  cfg.layer2 = {2 * c1, 3, 1, 1, 30.0};
  cfg.pool1_window = 2;
  cfg.pool2_window = 3;
  cfg.steps = 15;
  return cfg;
}

void NetworkConfig::validate() const {
  layer1.validate();
  layer2.validate();
  if (pool1_window == 0 || pool2_window == 0) {
    throw std::invalid_argument("pooling windows must be positive");
  }
  if (steps < 1) {
    throw std::invalid_argument("time steps must be positive");
  }
}

namespace {

struct Geometry {
  std::size_t channels, height, width, kernels, out_h, out_w;
};

Geometry check_forward(const LatencyMap& input, const Shape& wshape,
                       const ConvLayerConfig& cfg) {
  cfg.validate();
  if (input.shape().size() != 3 || wshape.size() != 4) {
    throw std::invalid_argument("if_conv_forward expects input [C,H,W] and weights [K,C,kh,kw]");
  }
  if (wshape[1] != input.shape()[0]) {
    throw std::invalid_argument("if_conv_forward: input has " +
                                std::to_string(input.shape()[0]) +
                                " channels, weights expect " + std::to_string(wshape[1]));
  }
  if (wshape[0] != cfg.out_channels || wshape[2] != cfg.window || wshape[3] != cfg.window) {
    throw std::invalid_argument("if_conv_forward: weight shape does not match layer config");
  }
  Geometry g{input.shape()[0], input.shape()[1], input.shape()[2], wshape[0], 0, 0};
  g.out_h = conv_out_size(g.height, cfg.window, cfg.stride, cfg.pad);
  g.out_w = conv_out_size(g.width, cfg.window, cfg.stride, cfg.pad);
  return g;
}

// Input spike indices bucketed by time, ascending flat index within a bucket.
std::vector<std::vector<std::size_t>> spikes_by_step(const LatencyMap& input) {
  std::vector<std::vector<std::size_t>> buckets(static_cast<std::size_t>(input.steps()));
  for (std::size_t i = 0; i < input.size(); ++i) {
    if (input.fired(i)) buckets[static_cast<std::size_t>(input[i])].push_back(i);
  }
  return buckets;
}

// Fires every not-yet-fired neuron whose potential reached the threshold.
// `potential` is [K,H',W'].
void fire(const std::vector<double>& potential, double threshold, int t, IfOutput& out) {
  auto frozen = out.potentials.data();
  for (std::size_t n = 0; n < potential.size(); ++n) {
    if (out.spikes.fired(n)) continue;
    frozen[n] = potential[n];
    if (potential[n] >= threshold) out.spikes.set(n, static_cast<LatencyMap::Time>(t));
  }
}

}  // namespace

IfOutput if_conv_forward(const LatencyMap& input, const Tensor& weights,
                         const ConvLayerConfig& cfg) {
  const Geometry g = check_forward(input, weights.shape(), cfg);
  for (double w : weights.data()) {
    if (w < 0.0 || w > 1.0) {
      throw std::invalid_argument("if_conv_forward: weights must lie in [0,1]");
    }
  }
  const std::size_t kh = cfg.window, kw = cfg.window, K = g.kernels;
  const std::size_t plane_in = g.height * g.width;
  const std::size_t out_plane = g.out_h * g.out_w;

  // [C,kh,kw,K] so that one afferent's contribution to all kernels is contiguous.
  std::vector<double> wt(weights.size());
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t r = 0; r < g.channels * kh * kw; ++r) {
      wt[r * K + k] = weights[k * g.channels * kh * kw + r];
    }
  }

  IfOutput out{LatencyMap({K, g.out_h, g.out_w}, input.steps()), Tensor({K, g.out_h, g.out_w})};
  std::vector<double> inc(out_plane * K);        // [H',W',K]
  std::vector<double> potential(out_plane * K);  // [K,H',W']
  const auto buckets = spikes_by_step(input);
  const auto pad = static_cast<std::ptrdiff_t>(cfg.pad);
  const auto stride = static_cast<std::ptrdiff_t>(cfg.stride);

  for (int t = 0; t < input.steps(); ++t) {
    const auto& spikes = buckets[static_cast<std::size_t>(t)];
    if (spikes.empty()) continue;
    std::fill(inc.begin(), inc.end(), 0.0);
    for (std::size_t idx : spikes) {
      const std::size_t c = idx / plane_in;
      const auto y = static_cast<std::ptrdiff_t>((idx % plane_in) / g.width);
      const auto x = static_cast<std::ptrdiff_t>(idx % g.width);
      for (std::size_t i = 0; i < kh; ++i) {
        const std::ptrdiff_t ny = y + pad - static_cast<std::ptrdiff_t>(i);
        if (ny < 0 || ny % stride != 0) continue;
        const auto oy = static_cast<std::size_t>(ny / stride);
        if (oy >= g.out_h) continue;
        for (std::size_t j = 0; j < kw; ++j) {
          const std::ptrdiff_t nx = x + pad - static_cast<std::ptrdiff_t>(j);
          if (nx < 0 || nx % stride != 0) continue;
          const auto ox = static_cast<std::size_t>(nx / stride);
          if (ox >= g.out_w) continue;
          const double* src = &wt[((c * kh + i) * kw + j) * K];
          double* dst = &inc[(oy * g.out_w + ox) * K];
          for (std::size_t k = 0; k < K; ++k) dst[k] += src[k];
        }
      }
    }
    for (std::size_t p = 0; p < out_plane; ++p) {
      for (std::size_t k = 0; k < K; ++k) potential[k * out_plane + p] += inc[p * K + k];
    }
    fire(potential, cfg.threshold, t, out);
  }
  return out;
}

IfOutput if_conv_forward(const LatencyMap& input, const PackedBits& weights,
                         const ConvLayerConfig& cfg) {
  const Geometry g = check_forward(input, weights.shape(), cfg);
  IfOutput out{LatencyMap({g.kernels, g.out_h, g.out_w}, input.steps()),
               Tensor({g.kernels, g.out_h, g.out_w})};
  std::vector<double> potential(out.potentials.size());
  const auto buckets = spikes_by_step(input);
  for (int t = 0; t < input.steps(); ++t) {
    const auto& spikes = buckets[static_cast<std::size_t>(t)];
    if (spikes.empty()) continue;
    PackedBits plane(input.shape());
    for (std::size_t idx : spikes) plane.set(idx, true);
    const Tensor inc = convolve2d_binary(plane, weights, cfg.stride, cfg.pad);
    for (std::size_t n = 0; n < potential.size(); ++n) potential[n] += inc[n];
    fire(potential, cfg.threshold, t, out);
  }
  return out;
}

LatencyMap spike_pool(const LatencyMap& input, std::size_t window) {
  if (window == 0) {
    throw std::invalid_argument("spike_pool: window must be positive");
  }
  if (input.shape().size() != 3) {
    throw std::invalid_argument("spike_pool expects [C,H,W]");
  }
  const std::size_t channels = input.shape()[0], h = input.shape()[1], w = input.shape()[2];
  const std::size_t oh = h / window, ow = w / window;
  LatencyMap out({channels, oh, ow}, input.steps());
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        LatencyMap::Time best = LatencyMap::kSilent;
        for (std::size_t i = 0; i < window; ++i) {
          for (std::size_t j = 0; j < window; ++j) {
            const auto t = input[(c * h + oy * window + i) * w + ox * window + j];
            if (t != LatencyMap::kSilent && (best == LatencyMap::kSilent || t < best)) best = t;
          }
        }
        out.set((c * oh + oy) * ow + ox, best);
      }
    }
  }
  return out;
}

std::vector<Winner> select_winners(const LatencyMap& spikes, const Tensor& potentials,
                                   std::size_t k, std::size_t inhibition_radius) {
  if (k == 0) {
    throw std::invalid_argument("select_winners: k must be positive");
  }
  if (spikes.shape().size() != 3 || potentials.shape() != spikes.shape()) {
    throw std::invalid_argument("select_winners: spikes and potentials must share a [K,H,W] shape");
  }
  const std::size_t channels = spikes.shape()[0], h = spikes.shape()[1], w = spikes.shape()[2];
  std::vector<std::size_t> candidates;
  for (std::size_t n = 0; n < spikes.size(); ++n) {
    if (spikes.fired(n)) candidates.push_back(n);
  }
  std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
    if (spikes[a] != spikes[b]) return spikes[a] < spikes[b];
    if (potentials[a] != potentials[b]) return potentials[a] > potentials[b];
    return a < b;
  });

  std::vector<Winner> winners;
  std::vector<char> channel_blocked(channels, 0);
  std::vector<char> place_blocked(h * w, 0);
  const auto r = static_cast<std::ptrdiff_t>(inhibition_radius);
  for (std::size_t n : candidates) {
    if (winners.size() == k) break;
    const std::size_t c = n / (h * w);
    const std::size_t p = n % (h * w);
    if (channel_blocked[c] || place_blocked[p]) continue;
    const std::size_t y = p / w, x = p % w;
    winners.push_back({c, y, x, spikes[n]});
    channel_blocked[c] = 1;
    const auto sy = static_cast<std::ptrdiff_t>(y), sx = static_cast<std::ptrdiff_t>(x);
    for (std::ptrdiff_t yy = std::max<std::ptrdiff_t>(0, sy - r);
         yy <= std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(h) - 1, sy + r); ++yy) {
      for (std::ptrdiff_t xx = std::max<std::ptrdiff_t>(0, sx - r);
           xx <= std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(w) - 1, sx + r); ++xx) {
        place_blocked[static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx)] = 1;
      }
    }
  }
  return winners;
}

}  // namespace spkn
