#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "spkn/tensor.hpp"

namespace spkn {

struct Dataset {
  std::string name;
  std::string split;
  std::vector<Tensor> images;  // [C,H,W], values in [0,1]
  std::vector<int> labels;
  std::vector<int> instance_ids;  // empty when the source has no instances
  std::vector<std::string> class_names;
  int classes = 0;

  std::size_t size() const noexcept { return images.size(); }
  // First n samples (or all, when n is 0 or too large).
  Dataset head(std::size_t n) const;
  Dataset subset(const std::vector<std::size_t>& indices) const;
};

/// Raw IDX array: element type code, dimensions and the payload bytes.
struct IdxArray {
  std::uint8_t type = 0x08;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;
};

IdxArray read_idx(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_idx(const IdxArray& array);

/// MNIST image/label IDX pair; pixels scaled by 1/255 into [1,28,28] tensors.
Dataset load_mnist(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Binary PGM (P5) or PPM (P6) with maxval <= 255, as [1,H,W] or [3,H,W].
Tensor read_pnm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Tensor& grey);
void write_ppm(const std::filesystem::path& path, const Tensor& rgb);

/// root/<category>/<instance>/<view>.{pgm,ppm}. Categories and instances are
/// taken in sorted name order; greyscale files are replicated to three
/// channels and every image is area-resized to side x side.
Dataset load_image_dir(const std::filesystem::path& root, std::size_t side = 64);

/// Seeded per-category choice of `train_instances` instance ids; every view of
/// an instance lands on the same side.
std::pair<Dataset, Dataset> split_by_instance(const Dataset& d, std::size_t train_instances,
                                              std::uint64_t seed);

}  // namespace spkn
