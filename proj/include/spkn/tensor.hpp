#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace spkn {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);

/// Dense row-major array of doubles. Images and feature maps are [C,H,W],
/// kernel banks are [K,C,kh,kw].
///
/// All values must be finite; the constructors check this. Mutable access
/// through data() or at() does not re-check.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  template <typename... Idx>
  double at(Idx... idx) const {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }
  template <typename... Idx>
  double& at(Idx... idx) {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }

  // Same data, new shape with equal element count.
  Tensor reshaped(Shape shape) const;

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  std::size_t offset(std::initializer_list<std::size_t> idx) const;

  Shape shape_;
  std::vector<double> data_;
};

/// One bit per element, row-major, packed little-end-first into 64-bit words.
/// Padding bits in the last word are always zero.
class PackedBits {
 public:
  using Word = std::uint64_t;
  static constexpr std::size_t kWordBits = 64;

  PackedBits() = default;
  explicit PackedBits(Shape shape);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return bits_; }
  std::span<const Word> words() const noexcept { return words_; }

  bool get(std::size_t i) const { return (words_[i / kWordBits] >> (i % kWordBits)) & 1U; }
  void set(std::size_t i, bool value) {
    const Word mask = Word{1} << (i % kWordBits);
    if (value) {
      words_[i / kWordBits] |= mask;
    } else {
      words_[i / kWordBits] &= ~mask;
    }
  }

  std::size_t popcount() const;

  // Rebuilds from raw words; rejects wrong word counts and dirty padding.
  static PackedBits from_words(Shape shape, std::vector<Word> words);

  friend bool operator==(const PackedBits& a, const PackedBits& b) = default;

 private:
  Shape shape_;
  std::size_t bits_ = 0;
  std::vector<Word> words_;
};

PackedBits pack(const Tensor& binary);
Tensor unpack(const PackedBits& bits);

/// out[k,y,x] = sum_{c,i,j} input[c, y*stride+i-pad, x*stride+j-pad] * kernels[k,c,i,j]
/// with zero padding. Summation order is c, then i, then j.
Tensor convolve2d(const Tensor& input, const Tensor& kernels, std::size_t stride,
                  std::size_t pad);

/// Binary counterpart of convolve2d on packed operands, computed with AND +
/// popcount over channel words. Result values are integers.
Tensor convolve2d_binary(const PackedBits& input, const PackedBits& kernels,
                         std::size_t stride, std::size_t pad);

// Output side length of a convolution/pooling window sweep.
std::size_t conv_out_size(std::size_t in, std::size_t window, std::size_t stride,
                          std::size_t pad);

}  // namespace spkn
