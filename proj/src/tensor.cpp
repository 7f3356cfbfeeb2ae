#include "spkn/tensor.hpp"

#include <bit>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>

namespace spkn {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::size_t conv_out_size(std::size_t in, std::size_t window, std::size_t stride,
                          std::size_t pad) {
  if (stride == 0 || window == 0) {
    throw std::invalid_argument("window and stride must be positive");
  }
  if (in + 2 * pad < window) {
    throw std::invalid_argument("window " + std::to_string(window) +
                                " does not fit input of size " + std::to_string(in));
  }
  return (in + 2 * pad - window) / stride + 1;
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
  if (!std::isfinite(fill)) {
    throw std::invalid_argument("tensor fill value must be finite");
  }
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                " does not match shape size " +
                                std::to_string(shape_size(shape_)));
  }
  for (double v : data_) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("tensor values must be finite");
    }
  }
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw std::invalid_argument("reshape changes element count");
  }
  Tensor out;
  out.shape_ = std::move(shape);
  out.data_ = data_;
  return out;
}

std::size_t Tensor::offset(std::initializer_list<std::size_t> idx) const {
  std::size_t off = 0;
  std::size_t axis = 0;
  for (std::size_t i : idx) {
    off = off * shape_[axis] + i;
    ++axis;
  }
  return off;
}

PackedBits::PackedBits(Shape shape)
    : shape_(std::move(shape)),
      bits_(shape_size(shape_)),
      words_((bits_ + kWordBits - 1) / kWordBits, Word{0}) {}

std::size_t PackedBits::popcount() const {
  std::size_t n = 0;
  for (Word w : words_) {
    n += static_cast<std::size_t>(std::popcount(w));
  }
  return n;
}

PackedBits PackedBits::from_words(Shape shape, std::vector<Word> words) {
  PackedBits out(std::move(shape));
  if (words.size() != out.words_.size()) {
    throw std::invalid_argument("packed word count does not match shape");
  }
  const std::size_t tail = out.bits_ % kWordBits;
  if (tail != 0 && (words.back() >> tail) != 0) {
    throw std::invalid_argument("packed padding bits must be zero");
  }
  out.words_ = std::move(words);
  return out;
}

PackedBits pack(const Tensor& binary) {
  PackedBits out(binary.shape());
  for (std::size_t i = 0; i < binary.size(); ++i) {
    const double v = binary[i];
    if (v == 1.0) {
      out.set(i, true);
    } else if (v != 0.0) {
      throw std::invalid_argument("pack: element " + std::to_string(i) + " is not 0 or 1");
    }
  }
  return out;
}

Tensor unpack(const PackedBits& bits) {
  Tensor out(bits.shape());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    out[i] = bits.get(i) ? 1.0 : 0.0;
  }
  return out;
}

namespace {

struct ConvGeometry {
  std::size_t channels, height, width, kernels, kh, kw, out_h, out_w;
};

ConvGeometry check_conv(const Shape& in, const Shape& k, std::size_t stride, std::size_t pad) {
  if (in.size() != 3 || k.size() != 4) {
    throw std::invalid_argument("convolve2d expects input [C,H,W] and kernels [K,C,kh,kw]");
  }
  if (in[0] != k[1]) {
    throw std::invalid_argument("convolve2d: input has " + std::to_string(in[0]) +
                                " channels, kernels expect " + std::to_string(k[1]));
  }
  ConvGeometry g{in[0], in[1], in[2], k[0], k[2], k[3], 0, 0};
  g.out_h = conv_out_size(g.height, g.kh, stride, pad);
  g.out_w = conv_out_size(g.width, g.kw, stride, pad);
  return g;
}

}  // namespace

Tensor convolve2d(const Tensor& input, const Tensor& kernels, std::size_t stride,
                  std::size_t pad) {
  const ConvGeometry g = check_conv(input.shape(), kernels.shape(), stride, pad);
  Tensor out({g.kernels, g.out_h, g.out_w});
  const auto in = input.data();
  const auto ker = kernels.data();
  auto dst = out.data();
  const auto ipad = static_cast<std::ptrdiff_t>(pad);
  const auto ih = static_cast<std::ptrdiff_t>(g.height);
  const auto iw = static_cast<std::ptrdiff_t>(g.width);
  for (std::size_t k = 0; k < g.kernels; ++k) {
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
      for (std::size_t ox = 0; ox < g.out_w; ++ox) {
        double acc = 0.0;
        for (std::size_t c = 0; c < g.channels; ++c) {
          const double* kc = &ker[((k * g.channels + c) * g.kh) * g.kw];
          const double* ic = &in[c * g.height * g.width];
          for (std::size_t i = 0; i < g.kh; ++i) {
            const auto y = static_cast<std::ptrdiff_t>(oy * stride + i) - ipad;
            if (y < 0 || y >= ih) continue;
            for (std::size_t j = 0; j < g.kw; ++j) {
              const auto x = static_cast<std::ptrdiff_t>(ox * stride + j) - ipad;
              if (x < 0 || x >= iw) continue;
              acc += ic[y * iw + x] * kc[i * g.kw + j];
            }
          }
        }
        dst[(k * g.out_h + oy) * g.out_w + ox] = acc;
      }
    }
  }
  return out;
}

Tensor convolve2d_binary(const PackedBits& input, const PackedBits& kernels,
                         std::size_t stride, std::size_t pad) {
  using Word = PackedBits::Word;
  const ConvGeometry g = check_conv(input.shape(), kernels.shape(), stride, pad);
  const std::size_t cw = (g.channels + PackedBits::kWordBits - 1) / PackedBits::kWordBits;

  // Transpose both operands so the channel axis is innermost and packed.
  std::vector<Word> pix(g.height * g.width * cw, 0);
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t p = 0; p < g.height * g.width; ++p) {
      if (input.get(c * g.height * g.width + p)) {
        pix[p * cw + c / 64] |= Word{1} << (c % 64);
      }
    }
  }
  std::vector<Word> ker(g.kernels * g.kh * g.kw * cw, 0);
  for (std::size_t k = 0; k < g.kernels; ++k) {
    for (std::size_t c = 0; c < g.channels; ++c) {
      for (std::size_t t = 0; t < g.kh * g.kw; ++t) {
        if (kernels.get((k * g.channels + c) * g.kh * g.kw + t)) {
          ker[(k * g.kh * g.kw + t) * cw + c / 64] |= Word{1} << (c % 64);
        }
      }
    }
  }

  Tensor out({g.kernels, g.out_h, g.out_w});
  auto dst = out.data();
  const auto ipad = static_cast<std::ptrdiff_t>(pad);
  const auto ih = static_cast<std::ptrdiff_t>(g.height);
  const auto iw = static_cast<std::ptrdiff_t>(g.width);
  for (std::size_t k = 0; k < g.kernels; ++k) {
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
      for (std::size_t ox = 0; ox < g.out_w; ++ox) {
        std::int64_t acc = 0;
        for (std::size_t i = 0; i < g.kh; ++i) {
          const auto y = static_cast<std::ptrdiff_t>(oy * stride + i) - ipad;
          if (y < 0 || y >= ih) continue;
          for (std::size_t j = 0; j < g.kw; ++j) {
            const auto x = static_cast<std::ptrdiff_t>(ox * stride + j) - ipad;
            if (x < 0 || x >= iw) continue;
            const Word* a = &pix[static_cast<std::size_t>(y * iw + x) * cw];
            const Word* b = &ker[(k * g.kh * g.kw + i * g.kw + j) * cw];
            for (std::size_t w = 0; w < cw; ++w) {
              acc += std::popcount(a[w] & b[w]);
            }
          }
        }
        dst[(k * g.out_h + oy) * g.out_w + ox] = static_cast<double>(acc);
      }
    }
  }
  return out;
}

}  // namespace spkn
