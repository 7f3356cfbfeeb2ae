#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "spkn/bench.hpp"
#include "spkn/config.hpp"
#include "spkn/errors.hpp"
#include "spkn/model_io.hpp"
#include "spkn/pipeline.hpp"
#include "spkn/stats.hpp"

using namespace spkn;
namespace fs = std::filesystem;

namespace {

// Two classes of 16x16 images: a horizontal or a vertical bar at a random
// offset, plus noise.
Dataset bars(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pos(3, 12);
  std::uniform_real_distribution<double> noise(0.0, 0.2);
  Dataset d;
  d.classes = 2;
  for (std::size_t i = 0; i < n; ++i) {
    Tensor img({1, 16, 16});
    const int label = static_cast<int>(i % 2), p = pos(rng);
    for (std::size_t y = 0; y < 16; ++y)
      for (std::size_t x = 0; x < 16; ++x) {
        const bool on = label == 0 ? std::abs(static_cast<int>(y) - p) <= 1
                                   : std::abs(static_cast<int>(x) - p) <= 1;
        img.at(0, y, x) = on ? 1.0 - noise(rng) : noise(rng);
      }
    d.images.push_back(img);
    d.labels.push_back(label);
  }
  return d;
}

PipelineConfig tiny() {
  PipelineConfig c = PipelineConfig::mnist();
  for (const char* s : {"network.channels1=4", "network.channels2=6", "network.threshold1=8",
                        "network.threshold2=4", "stdp.a_plus=0.05", "stdp.a_minus=-0.04",
                        "stdp.double_every=20", "pca.k=8", "classifier.lambda=1e-3"}) {
    c.set(s);
  }
  return c;
}

}  // namespace

TEST_CASE("presets carry the published values") {
  const PipelineConfig m = PipelineConfig::mnist();
  CHECK(m.sigmas == std::vector<double>{0.471, 1.099, 2.042});
  CHECK(m.cutoff == 0.01);
  CHECK(m.network.steps == 15);
  CHECK(m.stdp1.a_plus == 0.0004);
  CHECK(m.stdp1.a_minus == -0.0003);
  CHECK(m.stdp1.double_every == 2000);
  CHECK(m.stdp1.rate_cap == 0.15);
  CHECK(m.passes == 1);
  CHECK(m.network.layer1.out_channels == 50);
  const PipelineConfig e = PipelineConfig::eth80();
  CHECK(e.sigmas.size() == 9);
  CHECK(e.cutoff == 0.0025);
  CHECK(e.passes == 5);
  CHECK(e.stdp1.double_every == 410);
  CHECK(e.stdp1.rate_cap == 0.1);
  CHECK(e.mode == PreprocessMode::LogHsv);
}

TEST_CASE("config text round trip and errors") {
  const fs::path dir = fs::temp_directory_path() / "spkn_cfg_test";
  fs::create_directories(dir);
  PipelineConfig c = tiny();
  c.set("train.seed=17");
  c.set("stdp2.rate_cap=0.1");
  {
    std::ofstream(dir / "a.cfg") << c.to_ini();
  }
  const PipelineConfig back = PipelineConfig::load(dir / "a.cfg");
  CHECK(back.to_ini() == c.to_ini());
  CHECK(back.digest() == c.digest());
  CHECK(back.stdp2.rate_cap == 0.1);
  CHECK(back.stdp1.rate_cap == 0.15);
  CHECK(back.seed == 17);

  const PipelineConfig over = PipelineConfig::load(dir / "a.cfg", {"network.threshold1=3.5"});
  CHECK(over.network.layer1.threshold == 3.5);
  CHECK(over.digest() != c.digest());

  {
    std::ofstream(dir / "b.cfg") << "[network]\npreset = medium\nthreshold1 = 12\n"
                                    "[dataset]\ndir = mnist\n";
  }
  const PipelineConfig b = PipelineConfig::load(dir / "b.cfg");
  CHECK(b.network.layer1.out_channels == 100);
  CHECK(b.network.layer1.threshold == 12.0);
  CHECK(b.train_images == dir / "mnist" / "train-images-idx3-ubyte");

  {
    std::ofstream(dir / "c.cfg") << "[network]\nthreshhold1 = 12\n";
  }
  CHECK_THROWS(PipelineConfig::load(dir / "c.cfg"));
  CHECK_THROWS(c.set("preprocess.mode=sepia"));
  CHECK_THROWS(c.set("network.threshold1"));
  PipelineConfig wrong = c;
  wrong.set("stdp.a_minus=0.2");
  CHECK_THROWS(wrong.validate());
  fs::remove_all(dir);
}

TEST_CASE("mean difference interval") {
  const std::vector<double> a{10, 10, 10}, b{0, 0, 0};
  const Interval i = mean_diff_ci(a, b);
  CHECK(i.lo == 10.0);
  CHECK(i.hi == 10.0);
  CHECK(i.significant());

  const std::vector<double> x{1, 2, 3, 4}, y{2, 2, 5};
  // Hand computation: means 2.5 and 3, variances 5/3 and 3.
  const double half = 3.2905267314919255 * std::sqrt((5.0 / 3.0) / 4 + 3.0 / 3);
  const Interval j = mean_diff_ci(x, y);
  CHECK(j.lo == doctest::Approx(-0.5 - half).epsilon(1e-12));
  CHECK(j.hi == doctest::Approx(-0.5 + half).epsilon(1e-12));
  CHECK(normal_quantile_two_sided(0.999) == doctest::Approx(3.2905).epsilon(1e-4));
  CHECK(normal_quantile_two_sided(0.95) == doctest::Approx(1.959964).epsilon(1e-6));

  const Interval same = mean_diff_ci(x, x);
  CHECK(same.contains(0.0));
  CHECK(same.lo == doctest::Approx(-same.hi));

  std::mt19937_64 rng(30);
  std::normal_distribution<double> g1(1.0, 0.1), g0(0.0, 0.1);
  std::vector<double> s1, s0;
  for (int k = 0; k < 30; ++k) {
    s1.push_back(g1(rng));
    s0.push_back(g0(rng));
  }
  CHECK(mean_diff_ci(s1, s0).significant());
  CHECK_THROWS_AS(mean_diff_ci(std::vector<double>{1}, x), std::invalid_argument);
  CHECK(stddev(std::vector<double>{3, 3, 3}) == 0.0);
  CHECK(stddev(std::vector<double>{1, 3}) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("end to end on a toy dataset") {
  const Dataset train = bars(60, 1), test = bars(30, 2);
  const PipelineConfig cfg = tiny();
  const TrainReport r = run_train(cfg, train);
  const SpikingModel& m = r.model;
  CHECK(m.weights1.shape() == Shape{4, 6, 5, 5});
  CHECK(m.weights2.shape() == Shape{6, 4, 3, 3});
  CHECK(r.layer1_state.samples_seen == 60);
  CHECK(r.train_accuracy > 0.6);
  const StageTimes& t = r.times;
  CHECK(t.total() == doctest::Approx(t.wall).epsilon(0.01));

  const EvalReport e = run_eval(m, test);
  CHECK(e.accuracy > 0.6);
  CHECK(e.predictions.size() == 30);

  SUBCASE("model files are deterministic and round trip") {
    const auto bytes = serialize_model(m);
    CHECK(serialize_model(run_train(cfg, train).model) == bytes);
    const SpikingModel back = deserialize_model(bytes);
    CHECK(serialize_model(back) == bytes);
    CHECK(back.weights1 == m.weights1);
    CHECK(back.weights2 == m.weights2);
    CHECK(back.pca.components == m.pca.components);
    CHECK(back.classifier.weights == m.classifier.weights);
    CHECK(back.frontend.bank.kernels == m.frontend.bank.kernels);
    CHECK(back.input_scale == m.input_scale);
    CHECK(run_eval(back, test).predictions == e.predictions);

    const fs::path p = fs::temp_directory_path() / "spkn_model_test.spkn";
    save_model(p, m);
    CHECK(serialize_model(load_model(p)) == bytes);
    fs::remove(p);
  }

  SUBCASE("layer sections have the predicted size") {
    const auto bytes = serialize_model(m);
    auto section_len = [&](const char* tag) -> std::uint64_t {
      for (std::size_t i = 6; i + 12 <= bytes.size();) {
        std::uint64_t len = 0;
        for (int b = 0; b < 8; ++b) len |= std::uint64_t{bytes[i + 4 + b]} << (8 * b);
        if (std::equal(tag, tag + 4, bytes.begin() + static_cast<std::ptrdiff_t>(i))) return len;
        i += 12 + len;
      }
      return 0;
    };
    CHECK(section_len("LAY1") == kLayerHeaderBytes + (4 * 6 * 5 * 5 + 7) / 8);
    CHECK(section_len("LAY2") == kLayerHeaderBytes + (6 * 4 * 3 * 3 + 7) / 8);
  }

  SUBCASE("corruption is rejected with the section name") {
    auto bytes = serialize_model(m);
    auto bad = bytes;
    bad[1] = 'Q';
    CHECK_THROWS_AS(deserialize_model(bad), FormatError);
    bad = bytes;
    bad[4] = 9;
    CHECK_THROWS_AS(deserialize_model(bad), FormatError);
    bad = bytes;
    bad.resize(bytes.size() - 3);
    try {
      deserialize_model(bad);
      FAIL("truncated model accepted");
    } catch (const FormatError& err) {
      CHECK(err.where() == "SVM_");
    }
    bad = bytes;
    bad.push_back(0);
    CHECK_THROWS_AS(deserialize_model(bad), FormatError);
  }
}

TEST_CASE("pipeline errors are tagged with the stage") {
  PipelineConfig cfg = tiny();
  Dataset bad = bars(4, 3);
  bad.images[2] = Tensor({1, 12, 12});
  try {
    run_train(cfg, bad);
    FAIL("mismatched image accepted");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("preprocess") != std::string::npos);
  }
}

TEST_CASE("threshold grid search") {
  const Dataset train = bars(24, 5), val = bars(12, 6);
  PipelineConfig cfg = tiny();
  std::vector<GridPoint> seen;
  const GridResult g = threshold_grid_search({4, 8, 12}, {2, 4, 6}, train, val, cfg,
                                             [&](const GridPoint& p) { seen.push_back(p); });
  CHECK(g.runs.size() == 9);
  CHECK(seen.size() == 9);
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(g.runs[i].threshold1 == std::vector<double>{4, 8, 12}[i / 3]);
    CHECK(g.runs[i].threshold2 == std::vector<double>{2, 4, 6}[i % 3]);
    CHECK(g.runs[i].accuracy <= g.best.accuracy);
  }
  const GridResult one = threshold_grid_search({8}, {4}, train, val, cfg);
  CHECK(one.best.threshold1 == 8);
  CHECK(one.best.threshold2 == 4);
  CHECK_THROWS_AS(threshold_grid_search({}, {4}, train, val, cfg), std::invalid_argument);

  // A silent network reduces to the class prior: train on a 2:1 imbalanced
  // set and the majority class is predicted everywhere.
  Dataset skew = bars(36, 8);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < skew.size(); ++i)
    if (skew.labels[i] == 0 || i % 4 == 1) keep.push_back(i);
  const GridResult silent =
      threshold_grid_search({1e9}, {1e9}, skew.subset(keep), val, cfg);
  CHECK(silent.best.accuracy == doctest::Approx(0.5));
}

TEST_CASE("bench report") {
  const Dataset train = bars(20, 1), test = bars(10, 2);
  std::ostringstream csv;
  const BenchReport r = run_bench(tiny(), train, test, 2, &csv);
  CHECK(r.stats.size() == 2);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "run,seed,acc,t_preprocess,t_train,t_features,t_classify,t_total");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 2);
  CHECK(r.rows[1].seed == tiny().seed + 1);
  std::ostringstream summary;
  write_bench_summary(summary, r);
  CHECK(summary.str().find("runs 2") != std::string::npos);
  CHECK_THROWS_AS(run_bench(tiny(), train, test, 1), std::invalid_argument);
}
