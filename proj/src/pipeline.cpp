#include "spkn/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <chrono>
#include <stdexcept>
#include <string>

namespace spkn {

namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - start_).count();
    start_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Wraps module errors with the pipeline stage that raised them.
template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("[") + name + "] " + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("[") + name + "] " + e.what());
  }
}

}  // namespace

Frontend Frontend::make(const PipelineConfig& cfg) {
  Frontend f;
  f.mode = cfg.mode;
  f.cutoff = cfg.cutoff;
  f.steps = cfg.network.steps;
  if (cfg.mode != PreprocessMode::Zca) f.bank = FilterBank::make(cfg.sigmas, cfg.cutoff);
  return f;
}

Tensor Frontend::greyscale(const Tensor& image) {
  if (image.rank() == 3 && image.dim(0) == 1) return image;
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw std::invalid_argument("expected a [1,H,W] or [3,H,W] image");
  }
  const std::size_t plane = image.dim(1) * image.dim(2);
  Tensor out({1, image.dim(1), image.dim(2)});
  for (std::size_t p = 0; p < plane; ++p) {
    out[p] = 0.299 * image[p] + 0.587 * image[plane + p] + 0.114 * image[2 * plane + p];
  }
  return out;
}

Tensor Frontend::zca_input(const Tensor& image) {
  if (image.rank() == 3 && image.dim(0) == 1) return image;
  const Tensor hsv = rgb_to_hsv(image);
  const std::size_t plane = image.dim(1) * image.dim(2);
  return Tensor({1, image.dim(1), image.dim(2)},
                std::vector<double>(hsv.data().begin() + 2 * plane, hsv.data().end()));
}

void Frontend::fit(const std::vector<Tensor>& images, double zca_epsilon) {
  if (mode != PreprocessMode::Zca) return;
  std::vector<Tensor> inputs;
  inputs.reserve(images.size());
  for (const Tensor& img : images) inputs.push_back(zca_input(img));
  zca = zca_fit(inputs, zca_epsilon);
}

Tensor Frontend::feature_maps(const Tensor& image) const {
  switch (mode) {
    case PreprocessMode::LogGrey:
      return filter_rectify(greyscale(image), bank);
    case PreprocessMode::LogHsv:
      return filter_rectify(rgb_to_hsv(image), bank);
    case PreprocessMode::Zca:
      if (!zca) throw std::logic_error("ZCA frontend used before fit");
      return zca_apply(*zca, zca_input(image), cutoff);
  }
  throw std::logic_error("unknown preprocessing mode");
}

LatencyMap Frontend::encode(const Tensor& image) const {
  return rank_order_encode(feature_maps(image), steps);
}

std::size_t Frontend::channels(std::size_t image_channels) const {
  switch (mode) {
    case PreprocessMode::LogGrey:
      return 2 * bank.size();
    case PreprocessMode::LogHsv:
      return 2 * bank.size() * 3;
    case PreprocessMode::Zca:
      return 2;
  }
  return image_channels;
}

FeatureExtractor::FeatureExtractor(const ConvLayerConfig& layer1, const PackedBits& weights1,
                                   std::size_t pool1, const ConvLayerConfig& layer2,
                                   const PackedBits& weights2, std::size_t pool2)
    : layer1_(layer1),
      layer2_(layer2),
      weights1_(unpack(weights1)),
      weights2_(unpack(weights2)),
      pool1_(pool1),
      pool2_(pool2) {}

FeatureExtractor::FeatureExtractor(const SpikingModel& m)
    : FeatureExtractor(m.layer1, m.weights1, m.pool1, m.layer2, m.weights2, m.pool2) {}

LatencyMap FeatureExtractor::layer1_output(const LatencyMap& input) const {
  return spike_pool(if_conv_forward(input, weights1_, layer1_).spikes, pool1_);
}

LatencyMap FeatureExtractor::layer2_output(const LatencyMap& input) const {
  return spike_pool(if_conv_forward(layer1_output(input), weights2_, layer2_).spikes, pool2_);
}

Eigen::VectorXd FeatureExtractor::features(const LatencyMap& input) const {
  const Tensor t = timed_readout(layer2_output(input));
  return Eigen::Map<const Eigen::VectorXd>(t.data().data(), static_cast<Eigen::Index>(t.size()));
}

StageTimes& StageTimes::operator+=(const StageTimes& o) {
  preprocess += o.preprocess;
  train += o.train;
  features += o.features;
  classify += o.classify;
  wall += o.wall;
  return *this;
}

std::pair<Dataset, Dataset> load_datasets(const PipelineConfig& cfg) {
  return stage("load", [&] {
    if (cfg.dataset_kind == "mnist") {
      Dataset train = load_mnist(cfg.train_images, cfg.train_labels).head(cfg.train_limit);
      Dataset test = load_mnist(cfg.test_images, cfg.test_labels).head(cfg.test_limit);
      train.split = "train";
      test.split = "test";
      return std::make_pair(std::move(train), std::move(test));
    }
    const Dataset all = load_image_dir(cfg.image_root, cfg.image_size);
    auto [train, test] = split_by_instance(all, cfg.train_instances, cfg.split_seed);
    return std::make_pair(train.head(cfg.train_limit), test.head(cfg.test_limit));
  });
}

std::vector<LatencyMap> encode_all(const Frontend& frontend, const Dataset& data) {
  std::vector<LatencyMap> out;
  out.reserve(data.size());
  for (const Tensor& img : data.images) {
    if (!data.images.empty() && img.shape() != data.images.front().shape()) {
      throw std::invalid_argument("image " + std::to_string(out.size()) +
                                  " differs in shape from image 0");
    }
    out.push_back(frontend.encode(img));
  }
  return out;
}

namespace {

Eigen::MatrixXd feature_matrix(const FeatureExtractor& net, const std::vector<LatencyMap>& inputs) {
  Eigen::MatrixXd x;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Eigen::VectorXd f = net.features(inputs[i]);
    if (i > 0 && f.size() != x.cols()) {
      throw std::invalid_argument("feature vector length differs between samples");
    }
    if (i == 0) x.resize(static_cast<Eigen::Index>(inputs.size()), f.size());
    x.row(static_cast<Eigen::Index>(i)) = f.transpose();
  }
  return x;
}

}  // namespace

Eigen::MatrixXd classifier_inputs(const SpikingModel& model, const Eigen::MatrixXd& raw) {
  Eigen::MatrixXd reduced = pca_transform(model.pca, raw) * model.input_scale;
  if (model.rff_dims > 0) {
    reduced = rff_expand(reduced, model.rff_dims, model.rff_gamma, model.rff_seed);
  }
  return reduced;
}

TrainReport run_train(const PipelineConfig& cfg, const Dataset& train) {
  cfg.validate();
  if (train.size() < 2) {
    throw std::invalid_argument("run_train needs at least two training images");
  }
  TrainReport report;
  SpikingModel& model = report.model;
  Stopwatch total;
  Stopwatch watch;

  model.config_digest = cfg.digest();
  model.frontend = Frontend::make(cfg);
  const auto encoded = stage("preprocess", [&] {
    model.frontend.fit(train.images, cfg.zca_epsilon);
    return encode_all(model.frontend, train);
  });
  report.times.preprocess = watch.lap();

  const std::size_t in1 = encoded.front().shape()[0];
  model.layer1 = cfg.network.layer1;
  model.layer2 = cfg.network.layer2;
  model.pool1 = cfg.network.pool1_window;
  model.pool2 = cfg.network.pool2_window;
  stage("train layer 1", [&] {
    auto r = train_layer(
        encoded.size(), [&](std::size_t i) { return encoded[i]; }, in1, model.layer1, 0,
        cfg.stdp1, cfg.train_options(0));
    model.weights1 = std::move(r.binary);
    report.layer1_state = std::move(r.state);
    return 0;
  });
  stage("train layer 2", [&] {
    const Tensor w1 = unpack(model.weights1);
    auto input = [&](std::size_t i) {
      return spike_pool(if_conv_forward(encoded[i], w1, model.layer1).spikes, model.pool1);
    };
    auto r = train_layer(encoded.size(), input, model.layer1.out_channels, model.layer2, 1,
                         cfg.stdp2, cfg.train_options(1));
    model.weights2 = std::move(r.binary);
    report.layer2_state = std::move(r.state);
    return 0;
  });
  report.times.train = watch.lap();

  const Eigen::MatrixXd raw = stage("features", [&] {
    return feature_matrix(FeatureExtractor(model), encoded);
  });
  report.times.features = watch.lap();

  stage("classifier", [&] {
    const Eigen::Index k = std::min({cfg.pca_k, raw.rows() - 1, raw.cols()});
    model.pca = pca_fit(raw, k);
    const double rms = std::sqrt(pca_transform(model.pca, raw).rowwise().squaredNorm().mean());
    model.input_scale = rms > 0.0 ? 1.0 / rms : 1.0;
    model.rff_dims = cfg.rff_dims;
    model.rff_gamma = cfg.rff_gamma;
    model.rff_seed = cfg.seed;
    const Eigen::MatrixXd x = classifier_inputs(model, raw);
    SvmHyper hyper = cfg.svm;
    hyper.seed = cfg.seed;
    model.classifier = svm_train(x, train.labels, hyper);
    report.train_accuracy = accuracy(predict(model.classifier, x), train.labels);
    return 0;
  });
  report.times.classify = watch.lap();
  report.times.wall = total.lap();
  return report;
}

EvalReport run_eval(const SpikingModel& model, const Dataset& test) {
  EvalReport report;
  Stopwatch total;
  Stopwatch watch;
  const auto encoded = stage("preprocess", [&] { return encode_all(model.frontend, test); });
  report.times.preprocess = watch.lap();
  const Eigen::MatrixXd raw = stage("features", [&] {
    return feature_matrix(FeatureExtractor(model), encoded);
  });
  report.times.features = watch.lap();
  stage("classifier", [&] {
    report.predictions = predict(model.classifier, classifier_inputs(model, raw));
    report.accuracy = accuracy(report.predictions, test.labels);
    return 0;
  });
  report.times.classify = watch.lap();
  report.times.wall = total.lap();
  return report;
}

GridResult threshold_grid_search(const std::vector<double>& grid1,
                                 const std::vector<double>& grid2, const Dataset& train,
                                 const Dataset& validation, const PipelineConfig& cfg,
                                 const std::function<void(const GridPoint&)>& on_run) {
  if (grid1.empty() || grid2.empty()) {
    throw std::invalid_argument("threshold grid must not be empty");
  }
  GridResult result;
  bool have_best = false;
  for (double t1 : grid1) {
    for (double t2 : grid2) {
      PipelineConfig c = cfg;
      c.network.layer1.threshold = t1;
      c.network.layer2.threshold = t2;
      const TrainReport trained = run_train(c, train);
      const EvalReport eval = run_eval(trained.model, validation);
      const GridPoint point{t1, t2, eval.accuracy};
      result.runs.push_back(point);
      if (on_run) on_run(point);
      const bool better =
          !have_best || point.accuracy > result.best.accuracy ||
          (point.accuracy == result.best.accuracy &&
           std::make_pair(t1, t2) < std::make_pair(result.best.threshold1, result.best.threshold2));
      if (better) {
        result.best = point;
        have_best = true;
      }
    }
  }
  return result;
}

}  // namespace spkn
