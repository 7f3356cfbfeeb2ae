#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "../oracles.hpp"
#include "spkn/stdp.hpp"

using namespace spkn;

namespace {

ConvLayerConfig one_by_one() {
  ConvLayerConfig c;
  c.out_channels = 1;
  c.window = 1;
  c.threshold = 1.0;
  return c;
}

// Single-afferent update: weight w, input fired at `tj` (or silent), winner at `ti`.
double single(double w, int tj, int ti, double a_plus, double a_minus, const StdpConfig& cfg) {
  Tensor weights({1, 1, 1, 1}, w);
  LatencyMap in({1, 1, 1}, 15);
  if (tj >= 0) in.set(0, static_cast<LatencyMap::Time>(tj));
  stdp_update(weights, Winner{0, 0, 0, ti}, in, one_by_one(), a_plus, a_minus, cfg);
  return weights[0];
}

}  // namespace

TEST_CASE("stdp update arithmetic") {
  StdpConfig cfg;
  CHECK(single(0.5, 2, 3, 0.1, -0.1, cfg) == doctest::Approx(0.525).epsilon(1e-15));
  CHECK(single(0.5, 3, 3, 0.1, -0.1, cfg) == doctest::Approx(0.525).epsilon(1e-15));
  CHECK(single(0.5, 4, 3, 0.1, -0.1, cfg) == doctest::Approx(0.475).epsilon(1e-15));
  CHECK(single(0.5, -1, 3, 0.1, -0.2, cfg) == doctest::Approx(0.45).epsilon(1e-15));
  CHECK(single(0.0, 0, 3, 0.1, -0.1, cfg) == 0.0);
  CHECK(single(1.0, 0, 3, 0.1, -0.1, cfg) == 1.0);
  CHECK(single(1.0, 9, 3, 0.1, -0.1, cfg) == 1.0);
}

TEST_CASE("stdp laws on random triples") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> t(-1, 14);
  StdpConfig cfg;
  for (int rep = 0; rep < 10000; ++rep) {
    const double w = rep % 50 == 0 ? (rep % 100 == 0 ? 0.0 : 1.0) : u(rng);
    const int tj = t(rng), ti = std::max(0, t(rng));
    const double ap = 0.15 * u(rng) + 1e-6, am = -0.15 * u(rng) - 1e-6;
    const double got = single(w, tj, ti, ap, am, cfg);
    CHECK(got >= 0.0);
    CHECK(got <= 1.0);
    if (w == 0.0 || w == 1.0) {
      CHECK(got == w);
    } else if (tj >= 0 && tj <= ti) {
      CHECK(got > w);
    } else {
      CHECK(got < w);
    }
  }
}

TEST_CASE("stdp receptive field and switch fraction") {
  Tensor w({2, 1, 3, 3}, 0.5);
  w.at(1, 0, 1, 1) = 0.49;
  LatencyMap in({1, 4, 4}, 15);
  in.set(5, 0);  // (1,1)
  ConvLayerConfig layer;
  layer.out_channels = 2;
  layer.window = 3;
  layer.pad = 1;
  StdpConfig cfg;
  // Winner at output (1,0,0): receptive field rows -1..1, cols -1..1.
  const double frac = stdp_update(w, Winner{1, 0, 0, 2}, in, layer, 0.1, -0.1, cfg);
  CHECK(frac == doctest::Approx(1.0 / 9.0));
  for (std::size_t i = 0; i < 9; ++i) CHECK(w[i] == 0.5);  // channel 0 untouched
  CHECK(w.at(1, 0, 2, 2) > 0.5);   // afferent (1,1) fired first
  CHECK(w.at(1, 0, 0, 0) < 0.5);   // padded afferent
  CHECK(w.at(1, 0, 1, 1) < 0.49);  // silent afferent (0,0)
}

TEST_CASE("learning rate schedule") {
  StdpConfig cfg;
  TrainState s = TrainState::start(cfg, 0);
  for (int i = 0; i < 1999; ++i) schedule_step(s, cfg);
  CHECK(s.a_plus == 0.0004);
  schedule_step(s, cfg);
  CHECK(s.a_plus == 0.0008);
  CHECK(s.a_minus == -0.0006);

  StdpConfig near = cfg;
  near.a_plus = 0.1024;
  near.a_minus = -0.0768;
  near.double_every = 1;
  TrainState c = TrainState::start(near, 0);
  schedule_step(c, near);
  CHECK(c.a_plus == 0.15);
  CHECK(c.a_minus == doctest::Approx(-0.0768 * 0.15 / 0.1024).epsilon(1e-14));
  const double am = c.a_minus;
  for (int i = 0; i < 100; ++i) schedule_step(c, near);
  CHECK(c.a_plus == 0.15);
  CHECK(c.a_minus == am);
  CHECK(c.samples_seen == 101);
}

TEST_CASE("stdp config validation") {
  StdpConfig c;
  c.validate();
  StdpConfig bad = c;
  bad.a_minus = 0.1;
  CHECK_THROWS(bad.validate());
  bad = c;
  bad.a_plus = 0.2;
  CHECK_THROWS(bad.validate());
  bad = c;
  bad.quantize_at = 1.0;
  CHECK_THROWS(bad.validate());
  bad = c;
  bad.double_every = 0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("quantize") {
  CHECK(quantize(Tensor({1}, 0.5), 0.5).popcount() == 0);
  CHECK(quantize(Tensor({5, 5}, 0.9), 0.5).popcount() == 25);
  std::mt19937_64 rng(2);
  const Tensor w = oracle::random_tensor(rng, {4, 3, 5, 5}, 0, 1);
  const PackedBits q = quantize(w, 0.5);
  std::size_t above = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    above += w[i] > 0.5;
    CHECK(q.get(i) == (w[i] > 0.5));
  }
  CHECK(q.popcount() == above);
}

TEST_CASE("switch rate curve") {
  for (double v : switch_rate_curve(std::vector<double>(30, 0.2))) CHECK(v == doctest::Approx(0.2));
  CHECK_THROWS_AS(switch_rate_curve(std::vector<double>(5, 0.0), 10), std::invalid_argument);
  CHECK(switch_rate_curve(std::vector<double>{}).empty());

  std::vector<double> h(11, 0.1);
  h.resize(200, 0.0);
  const auto c = switch_rate_curve(h);
  CHECK(c[0] == doctest::Approx(0.1));
  CHECK(c[10] == doctest::Approx(0.1 * 6 / 11));
  CHECK(c[16] == 0.0);
  CHECK(c.back() == 0.0);
  CHECK_FALSE(should_stop(std::span(c).first(16), 1e-4, 50));
  CHECK_FALSE(should_stop(std::span(c).first(65), 1e-4, 50));
  CHECK(should_stop(std::span(c).first(66), 1e-4, 50));

  std::vector<double> dec(40);
  for (std::size_t i = 0; i < dec.size(); ++i) dec[i] = 1.0 / (1.0 + i);
  const auto d = switch_rate_curve(dec);
  for (std::size_t i = 1; i < d.size(); ++i) CHECK(d[i] < d[i - 1]);

  // Shrinking edge window: point 2 averages entries 0..4.
  std::vector<double> ramp{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  const auto r = switch_rate_curve(ramp);
  CHECK(r[0] == 0.0);
  CHECK(r[2] == doctest::Approx(2.0));
  CHECK(r[6] == doctest::Approx(6.0));
}

TEST_CASE("training log csv") {
  TrainState s;
  s.switch_history = {0.5, 0.25};
  s.update_sample = {0, 1};
  s.update_a_plus = {0.1, 0.1};
  std::ostringstream os;
  write_training_log(os, s, 3);
  CHECK(os.str() == "update,sample,a_plus,switch_fraction,smoothed\n0,0,0.1,0.5,0.5\n1,1,0.1,0.25,0.25\n");
}

TEST_CASE("training converges to a repeated pattern") {
  const bool pattern[25] = {0, 1, 1, 0, 0, 1, 0, 0, 1, 0, 1, 1, 1, 1, 1,
                            0, 0, 0, 1, 0, 0, 1, 1, 0, 1};
  LatencyMap sample({1, 5, 5}, 15);
  for (std::size_t i = 0; i < 25; ++i)
    if (pattern[i]) sample.set(i, 0);
  ConvLayerConfig layer;
  layer.out_channels = 1;
  layer.window = 5;
  layer.threshold = 3.0;
  StdpConfig cfg;
  cfg.a_plus = 0.05;
  cfg.a_minus = -0.05;
  cfg.rate_cap = 0.15;
  cfg.double_every = 100000;
  TrainOptions opt;
  opt.seed = 42;
  const auto r = train_layer(400, [&](std::size_t) { return sample; }, 1, layer, 0, cfg, opt);
  for (std::size_t i = 0; i < 25; ++i) CHECK(r.binary.get(i) == pattern[i]);
  CHECK(r.state.samples_seen == 400);
  CHECK(r.state.switch_history.size() == 400);
  for (double f : r.state.switch_history) CHECK((f >= 0.0 && f <= 1.0));
  for (double v : r.weights.data()) CHECK((v >= 0.0 && v <= 1.0));

  const auto again = train_layer(400, [&](std::size_t) { return sample; }, 1, layer, 0, cfg, opt);
  CHECK(again.binary == r.binary);
  CHECK(again.weights == r.weights);
}

TEST_CASE("early stop") {
  LatencyMap sample({1, 5, 5}, 15);
  for (std::size_t i = 0; i < 25; i += 2) sample.set(i, 0);
  ConvLayerConfig layer;
  layer.window = 5;
  layer.threshold = 2.0;
  StdpConfig cfg;
  cfg.a_plus = 0.1;
  cfg.a_minus = -0.1;
  cfg.rate_cap = 0.1;
  TrainOptions opt;
  opt.early_stop = true;
  opt.stop_patience = 20;
  const auto r = train_layer(5000, [&](std::size_t) { return sample; }, 1, layer, 0, cfg, opt);
  CHECK(r.stopped_early);
  CHECK(r.state.samples_seen < 5000);
}
