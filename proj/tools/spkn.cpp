// spkn: train, evaluate, benchmark and inspect the spiking network.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "spkn/bench.hpp"
#include "spkn/config.hpp"
#include "spkn/data.hpp"
#include "spkn/model_io.hpp"
#include "spkn/pipeline.hpp"
#include "spkn/stats.hpp"

namespace fs = std::filesystem;
using namespace spkn;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config,-c", c.config, "Config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--set", c.overrides, "Override, e.g. --set network.threshold1=12");
}

PipelineConfig load_config(const Common& c) {
  PipelineConfig cfg = PipelineConfig::load(c.config, c.overrides);
  cfg.validate();
  return cfg;
}

void print_times(const char* what, const StageTimes& t) {
  std::printf("%s time_s preprocess %.2f train %.2f features %.2f classify %.2f total %.2f\n",
              what, t.preprocess, t.train, t.features, t.classify, t.total());
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (item.find_first_not_of(" \t", used) != std::string::npos) {
      throw std::invalid_argument("bad grid value '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

void write_log(const fs::path& path, const TrainState& state, std::size_t window) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_training_log(os, state, window);
}

int cmd_train(const Common& common, const std::string& out, const std::optional<std::uint64_t>& seed,
              const std::string& log_prefix) {
  PipelineConfig cfg = load_config(common);
  if (seed) cfg.seed = *seed;
  auto [train, test] = load_datasets(cfg);
  std::printf("training on %zu images (%s)\n", train.size(), train.name.c_str());
  const TrainReport r = run_train(cfg, train);
  save_model(out, r.model);
  if (!log_prefix.empty()) {
    write_log(log_prefix + "_layer1.csv", r.layer1_state, cfg.smoothing_window);
    write_log(log_prefix + "_layer2.csv", r.layer2_state, cfg.smoothing_window);
  }
  std::printf("samples layer1 %zu layer2 %zu\n", r.layer1_state.samples_seen,
              r.layer2_state.samples_seen);
  std::printf("train_accuracy %.4f\n", r.train_accuracy);
  print_times("train", r.times);
  std::printf("model %s\n", out.c_str());
  return 0;
}

int cmd_eval(const Common& common, const std::string& model_path) {
  const PipelineConfig cfg = load_config(common);
  const SpikingModel model = load_model(model_path);
  if (model.config_digest != cfg.digest()) {
    std::fprintf(stderr, "note: model was trained with a different config\n");
  }
  auto [train, test] = load_datasets(cfg);
  const EvalReport r = run_eval(model, test);
  std::printf("test images %zu\n", test.size());
  std::printf("accuracy %.4f\n", r.accuracy);
  print_times("eval", r.times);
  return 0;
}

int cmd_bench(const Common& common, std::size_t repeats, const std::string& out) {
  const PipelineConfig cfg = load_config(common);
  auto [train, test] = load_datasets(cfg);
  std::ofstream csv(out);
  if (!csv) throw std::runtime_error("cannot write " + out);
  const BenchReport r = run_bench(cfg, train, test, repeats, &csv);
  write_bench_summary(std::cout, r);
  return 0;
}

RunStats read_bench_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(is, line);
  if (line != kBenchCsvHeader) throw std::runtime_error(path.string() + ": not a bench CSV");
  RunStats stats;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8) throw std::runtime_error(path.string() + ": bad row '" + line + "'");
    stats.samples.push_back({std::stod(cells[2]), std::stod(cells[7])});
  }
  return stats;
}

int cmd_compare(const std::string& a_path, const std::string& b_path, double level) {
  const RunStats a = read_bench_csv(a_path), b = read_bench_csv(b_path);
  auto report = [&](const char* what, const std::vector<double>& x, const std::vector<double>& y) {
    const Interval ci = mean_diff_ci(x, y, level);
    std::printf("%s a %.6g +- %.3g  b %.6g +- %.3g  diff [%.6g, %.6g] %s\n", what, mean(x),
                stddev(x), mean(y), stddev(y), ci.lo, ci.hi,
                ci.significant() ? "significant" : "not significant");
  };
  std::printf("runs a %zu b %zu level %.4g\n", a.size(), b.size(), level);
  report("acc", a.accuracies(), b.accuracies());
  report("time_s", a.wall_times(), b.wall_times());
  return 0;
}

int cmd_grid(const Common& common, const std::string& thresholds, std::size_t val_count) {
  const PipelineConfig cfg = load_config(common);
  const auto sep = thresholds.find(';');
  if (sep == std::string::npos) {
    throw std::invalid_argument("--thresholds needs two lists separated by ';'");
  }
  const auto g1 = parse_grid(thresholds.substr(0, sep));
  const auto g2 = parse_grid(thresholds.substr(sep + 1));
  auto [train, test] = load_datasets(cfg);
  if (val_count == 0 || val_count >= train.size()) {
    throw std::invalid_argument("--val must be between 1 and the training set size - 1");
  }
  // Validation comes from the tail of the training set; the test set stays unseen.
  std::vector<std::size_t> fit_idx, val_idx;
  for (std::size_t i = 0; i < train.size(); ++i) {
    (i < train.size() - val_count ? fit_idx : val_idx).push_back(i);
  }
  std::printf("threshold1,threshold2,val_acc\n");
  const GridResult r = threshold_grid_search(
      g1, g2, train.subset(fit_idx), train.subset(val_idx), cfg, [](const GridPoint& p) {
        std::printf("%g,%g,%.4f\n", p.threshold1, p.threshold2, p.accuracy);
        std::fflush(stdout);
      });
  std::printf("best threshold1 %g threshold2 %g val_acc %.4f\n", r.best.threshold1,
              r.best.threshold2, r.best.accuracy);
  return 0;
}

// Kernels as a greyscale mosaic: one row per output channel, one tile per
// input channel, `zoom` pixels per weight and a 1-pixel mid-grey gap.
void write_mosaic(const fs::path& path, const PackedBits& w, std::size_t zoom) {
  const std::size_t k = w.shape()[0], c = w.shape()[1], kh = w.shape()[2], kw = w.shape()[3];
  const std::size_t th = kh * zoom + 1, tw = kw * zoom + 1;
  Tensor img({1, k * th + 1, c * tw + 1}, 0.5);
  for (std::size_t o = 0; o < k; ++o)
    for (std::size_t ci = 0; ci < c; ++ci)
      for (std::size_t i = 0; i < kh; ++i)
        for (std::size_t j = 0; j < kw; ++j) {
          const double v = w.get(((o * c + ci) * kh + i) * kw + j) ? 1.0 : 0.0;
          for (std::size_t dy = 0; dy < zoom; ++dy)
            for (std::size_t dx = 0; dx < zoom; ++dx)
              img.at(0, o * th + 1 + i * zoom + dy, ci * tw + 1 + j * zoom + dx) = v;
        }
  write_pgm(path, img);
}

int cmd_inspect(const std::string& model_path, const std::string& out_dir, std::size_t zoom) {
  const SpikingModel m = load_model(model_path);
  std::printf("config_digest %016llx\n", static_cast<unsigned long long>(m.config_digest));
  std::printf("preprocess %s sigmas %zu steps %d zca %s\n",
              std::string(to_string(m.frontend.mode)).c_str(), m.frontend.bank.size(),
              m.frontend.steps, m.frontend.zca ? "yes" : "no");
  auto layer = [](const char* name, const ConvLayerConfig& l, const PackedBits& w,
                  std::size_t pool) {
    std::printf("%s weights %zux%zux%zux%zu stride %zu pad %zu threshold %g pool %zu ones %.4f\n",
                name, w.shape()[0], w.shape()[1], w.shape()[2], w.shape()[3], l.stride, l.pad,
                l.threshold, pool, static_cast<double>(w.popcount()) / w.size());
  };
  layer("layer1", m.layer1, m.weights1, m.pool1);
  layer("layer2", m.layer2, m.weights2, m.pool2);
  std::printf("pca %lld -> %lld\n", static_cast<long long>(m.pca.input_dims()),
              static_cast<long long>(m.pca.output_dims()));
  std::printf("classifier classes %lld dims %lld lambda %g rff %lld\n",
              static_cast<long long>(m.classifier.classes()),
              static_cast<long long>(m.classifier.dims()), m.classifier.reg_lambda,
              static_cast<long long>(m.rff_dims));
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_mosaic(fs::path(out_dir) / "layer1.pgm", m.weights1, zoom);
    write_mosaic(fs::path(out_dir) / "layer2.pgm", m.weights2, zoom);
    std::printf("mosaics %s/layer1.pgm %s/layer2.pgm\n", out_dir.c_str(), out_dir.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spiking convolutional network with STDP and binary weights"};
  app.require_subcommand(1);

  Common train_c, eval_c, bench_c, grid_c;
  std::string model_out, model_in, bench_out, thresholds, log_prefix, inspect_model, inspect_out;
  std::string cmp_a, cmp_b;
  std::optional<std::uint64_t> seed;
  std::size_t repeats = 30, val_count = 1000, zoom = 4;
  double level = 0.999;

  auto* train = app.add_subcommand("train", "Train a model and save it");
  add_common(train, train_c);
  train->add_option("--out,-o", model_out, "Model file to write")->required();
  train->add_option("--seed", seed, "Seed (overrides train.seed)");
  train->add_option("--log", log_prefix,
                    "Write <prefix>_layer1.csv and <prefix>_layer2.csv switch-rate logs");

  auto* eval = app.add_subcommand("eval", "Evaluate a saved model on the test set");
  add_common(eval, eval_c);
  eval->add_option("--model,-m", model_in, "Model file")->required()->check(CLI::ExistingFile);

  auto* bench = app.add_subcommand("bench", "Repeated train+eval runs with per-run CSV");
  add_common(bench, bench_c);
  bench->add_option("--repeats,-n", repeats, "Number of runs (seeds seed..seed+n-1)")
      ->capture_default_str();
  bench->add_option("--out,-o", bench_out, "CSV file to write")->required();

  auto* compare = app.add_subcommand("compare", "Mean-difference interval of two bench CSVs");
  compare->add_option("a", cmp_a, "First bench CSV")->required()->check(CLI::ExistingFile);
  compare->add_option("b", cmp_b, "Second bench CSV")->required()->check(CLI::ExistingFile);
  compare->add_option("--level", level, "Two-sided confidence level")->capture_default_str();

  auto* grid = app.add_subcommand("grid", "Grid search over the two firing thresholds");
  add_common(grid, grid_c);
  grid->add_option("--thresholds,-t", thresholds, "Grids as \"g1;g2\", e.g. \"10,15;20,30\"")
      ->required();
  grid->add_option("--val", val_count, "Validation images taken from the training set tail")
      ->capture_default_str();

  auto* inspect = app.add_subcommand("inspect", "Print a model summary and kernel mosaics");
  inspect->add_option("--model,-m", inspect_model, "Model file")->required()->check(CLI::ExistingFile);
  inspect->add_option("--out,-o", inspect_out, "Directory for layer1.pgm and layer2.pgm");
  inspect->add_option("--zoom", zoom, "Pixels per weight")->capture_default_str()->check(
      CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(train_c, model_out, seed, log_prefix);
    if (*eval) return cmd_eval(eval_c, model_in);
    if (*bench) return cmd_bench(bench_c, repeats, bench_out);
    if (*compare) return cmd_compare(cmp_a, cmp_b, level);
    if (*grid) return cmd_grid(grid_c, thresholds, val_count);
    if (*inspect) return cmd_inspect(inspect_model, inspect_out, zoom);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
