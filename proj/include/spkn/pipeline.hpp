#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "spkn/classify.hpp"
#include "spkn/config.hpp"
#include "spkn/data.hpp"
#include "spkn/encoding.hpp"
#include "spkn/network.hpp"
#include "spkn/preprocess.hpp"
#include "spkn/reduce.hpp"
#include "spkn/stdp.hpp"

namespace spkn {

/// Image -> rank-order spikes. Holds the fitted ZCA model in zca mode.
struct Frontend {
  PreprocessMode mode = PreprocessMode::LogGrey;
  FilterBank bank;
  double cutoff = 0.0;
  std::optional<ZcaModel> zca;
  int steps = 15;

  static Frontend make(const PipelineConfig& cfg);
  // Weighted RGB luminance for the grey LoG path; [1,H,W] input passes through.
  static Tensor greyscale(const Tensor& image);
  // HSV value channel, the single channel the ZCA model whitens.
  static Tensor zca_input(const Tensor& image);

  /// Fits the ZCA model when needed; no-op for the LoG modes.
  void fit(const std::vector<Tensor>& images, double zca_epsilon);
  Tensor feature_maps(const Tensor& image) const;
  LatencyMap encode(const Tensor& image) const;
  std::size_t channels(std::size_t image_channels) const;
};

/// Everything needed to classify an image, as persisted in a model file.
struct SpikingModel {
  std::uint64_t config_digest = 0;
  Frontend frontend;
  ConvLayerConfig layer1;
  PackedBits weights1;
  std::size_t pool1 = 2;
  ConvLayerConfig layer2;
  PackedBits weights2;
  std::size_t pool2 = 3;
  PcaModel pca;
  // PCA outputs are multiplied by this before the classifier so that training
  // rows have unit RMS norm.
  double input_scale = 1.0;
  LinearModel classifier;
  Eigen::Index rff_dims = 0;
  double rff_gamma = 0.0;
  std::uint64_t rff_seed = 0;
};

/// Frozen binary network used for feature extraction.
class FeatureExtractor {
 public:
  FeatureExtractor(const ConvLayerConfig& layer1, const PackedBits& weights1, std::size_t pool1,
                   const ConvLayerConfig& layer2, const PackedBits& weights2, std::size_t pool2);
  explicit FeatureExtractor(const SpikingModel& model);

  LatencyMap layer1_output(const LatencyMap& input) const;  // after pool 1
  LatencyMap layer2_output(const LatencyMap& input) const;  // after pool 2
  /// Timed readout of the last pooled layer, flattened.
  Eigen::VectorXd features(const LatencyMap& input) const;

 private:
  ConvLayerConfig layer1_, layer2_;
  Tensor weights1_, weights2_;
  std::size_t pool1_, pool2_;
};

struct StageTimes {
  double preprocess = 0.0;
  double train = 0.0;
  double features = 0.0;
  double classify = 0.0;
  double wall = 0.0;  // measured end to end

  double total() const { return preprocess + train + features + classify; }
  StageTimes& operator+=(const StageTimes& o);
};

struct TrainReport {
  SpikingModel model;
  TrainState layer1_state;
  TrainState layer2_state;
  double train_accuracy = 0.0;
  StageTimes times;
};

struct EvalReport {
  double accuracy = 0.0;
  std::vector<int> predictions;
  StageTimes times;
};

/// Train and test sets as described by the config (MNIST files with limits,
/// or an image directory split by instance).
std::pair<Dataset, Dataset> load_datasets(const PipelineConfig& cfg);

std::vector<LatencyMap> encode_all(const Frontend& frontend, const Dataset& data);

/// preprocess -> encode -> STDP layer 1 -> quantize -> STDP layer 2 ->
/// quantize -> timed features -> PCA -> linear classifier.
TrainReport run_train(const PipelineConfig& cfg, const Dataset& train);
EvalReport run_eval(const SpikingModel& model, const Dataset& test);

/// Feature rows for a whole dataset, through PCA and input scaling (and RFF if
/// enabled).
Eigen::MatrixXd classifier_inputs(const SpikingModel& model, const Eigen::MatrixXd& raw);

struct GridPoint {
  double threshold1 = 0.0;
  double threshold2 = 0.0;
  double accuracy = 0.0;
};

struct GridResult {
  GridPoint best;
  std::vector<GridPoint> runs;  // every evaluated combination, in grid order
};

/// Trains and validates the pipeline for every (threshold1, threshold2) pair;
/// the best validation accuracy wins, ties go to the smaller thresholds.
GridResult threshold_grid_search(const std::vector<double>& grid1,
                                 const std::vector<double>& grid2, const Dataset& train,
                                 const Dataset& validation, const PipelineConfig& cfg,
                                 const std::function<void(const GridPoint&)>& on_run = {});

}  // namespace spkn
