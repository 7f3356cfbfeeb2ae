#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "spkn/classify.hpp"
#include "spkn/network.hpp"
#include "spkn/stdp.hpp"

namespace spkn {

enum class PreprocessMode { LogGrey, LogHsv, Zca };

std::string_view to_string(PreprocessMode mode);
PreprocessMode parse_preprocess_mode(std::string_view text);

/// Everything a train/eval/bench run needs. Loaded from an INI-style file:
///
///   [dataset]     kind (mnist|image_dir), dir, train_images, train_labels,
///                 test_images, test_labels, root, image_size, train_limit,
///                 test_limit, train_instances, split_seed
///   [preprocess]  mode (log-grey|log-hsv|zca), sigmas, cutoff, zca_epsilon
///   [network]     preset, steps, channels1, channels2, threshold1, threshold2,
///                 winners, inhibition_radius
///   [stdp]        a_plus, a_minus, lower, upper, double_every, rate_cap,
///                 quantize_at  (shared defaults)
///   [stdp1] [stdp2]  per-layer overrides of the [stdp] keys
///   [train]       passes, init_mean, init_sd, early_stop, stop_epsilon,
///                 stop_patience, smoothing_window, seed
///   [pca]         k
///   [classifier]  lambda, epochs, rff_dims, rff_gamma
///
/// Relative paths resolve against the config file's directory.
struct PipelineConfig {
  // dataset
  std::string dataset_kind = "mnist";
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path test_images;
  std::filesystem::path test_labels;
  std::filesystem::path image_root;
  std::size_t image_size = 64;
  std::size_t train_limit = 0;  // 0 = everything
  std::size_t test_limit = 0;
  std::size_t train_instances = 5;
  std::uint64_t split_seed = 0;

  // preprocessing
  PreprocessMode mode = PreprocessMode::LogGrey;
  std::vector<double> sigmas{0.471, 1.099, 2.042};
  double cutoff = 0.01;
  double zca_epsilon = 1e-2;

  // network + learning
  std::string preset = "small";
  NetworkConfig network = NetworkConfig::preset("small");
  std::size_t winners = 5;
  std::size_t inhibition_radius = 3;
  StdpConfig stdp1;
  StdpConfig stdp2;
  std::size_t passes = 1;
  double init_mean = 0.5;
  double init_sd = 0.02;
  bool early_stop = false;
  double stop_epsilon = 1e-4;
  std::size_t stop_patience = 50;
  std::size_t smoothing_window = 11;
  std::uint64_t seed = 1;

  // readout
  Eigen::Index pca_k = 256;
  SvmHyper svm;
  Eigen::Index rff_dims = 0;  // 0 disables the random-feature expansion
  double rff_gamma = 1e-3;

  static PipelineConfig mnist();
  static PipelineConfig eth80();

  static PipelineConfig load(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});
  /// Applies "section.key=value" on top of the current values.
  void set(std::string_view assignment, const std::filesystem::path& base = {});

  /// Canonical INI text; loading it back gives an identical config.
  std::string to_ini() const;
  /// FNV-1a of to_ini(), stored in model files.
  std::uint64_t digest() const;

  TrainOptions train_options(std::size_t layer_index) const;
  void validate() const;
};

}  // namespace spkn
