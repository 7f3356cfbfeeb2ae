#include "spkn/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

#include "spkn/errors.hpp"

namespace spkn {

Tensor log_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("log_kernel: sigma must be positive");
  }
  const auto half = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  const auto side = static_cast<std::size_t>(2 * half + 1);
  const double s2 = sigma * sigma;
  Tensor k({side, side});
  double sum = 0.0;
  for (std::ptrdiff_t y = -half; y <= half; ++y) {
    for (std::ptrdiff_t x = -half; x <= half; ++x) {
      const double r2 = static_cast<double>(x * x + y * y);
      const double v = (r2 - 2.0 * s2) / (s2 * s2) * std::exp(-r2 / (2.0 * s2));
      k.at(y + half, x + half) = v;
      sum += v;
    }
  }
  const double mean = sum / static_cast<double>(k.size());
  double peak = 0.0;
  for (double& v : k.data()) {
    v -= mean;
    peak = std::max(peak, std::abs(v));
  }
  for (double& v : k.data()) {
    v /= peak;
  }
  return k;
}

FilterBank FilterBank::make(std::vector<double> sigmas, double cutoff) {
  if (sigmas.empty()) {
    throw std::invalid_argument("filter bank needs at least one sigma");
  }
  if (!(cutoff >= 0.0)) {
    throw std::invalid_argument("filter bank cutoff must be non-negative");
  }
  std::vector<Tensor> ks;
  std::size_t side = 0;
  for (double s : sigmas) {
    ks.push_back(log_kernel(s));
    side = std::max(side, ks.back().dim(0));
  }
  FilterBank bank;
  bank.kernels = Tensor({ks.size(), 1, side, side});
  for (std::size_t f = 0; f < ks.size(); ++f) {
    const std::size_t s = ks[f].dim(0);
    const std::size_t off = (side - s) / 2;
    for (std::size_t y = 0; y < s; ++y) {
      for (std::size_t x = 0; x < s; ++x) {
        bank.kernels.at(f, 0, y + off, x + off) = ks[f].at(y, x);
      }
    }
  }
  bank.sigmas = std::move(sigmas);
  bank.cutoff = cutoff;
  return bank;
}

Tensor filter_rectify(const Tensor& image, const FilterBank& bank) {
  if (image.rank() != 3) {
    throw std::invalid_argument("filter_rectify expects [C,H,W]");
  }
  const std::size_t channels = image.dim(0), h = image.dim(1), w = image.dim(2);
  const std::size_t filters = bank.size();
  const std::size_t pad = bank.kernels.dim(2) / 2;
  const std::size_t plane = h * w;
  Tensor out({2 * filters * channels, h, w});
  auto dst = out.data();
  for (std::size_t c = 0; c < channels; ++c) {
    Tensor single({1, h, w},
                  std::vector<double>(image.data().begin() + c * plane,
                                      image.data().begin() + (c + 1) * plane));
    const Tensor resp = convolve2d(single, bank.kernels, 1, pad);
    for (std::size_t f = 0; f < filters; ++f) {
      double* on = &dst[((f * channels + c) * 2) * plane];
      double* off = on + plane;
      for (std::size_t p = 0; p < plane; ++p) {
        const double r = resp[f * plane + p];
        const double pos = r > 0.0 ? r : 0.0;
        const double neg = r < 0.0 ? -r : 0.0;
        on[p] = pos < bank.cutoff ? 0.0 : pos;
        off[p] = neg < bank.cutoff ? 0.0 : neg;
      }
    }
  }
  return out;
}

Tensor rgb_to_hsv(const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw std::invalid_argument("rgb_to_hsv expects [3,H,W]");
  }
  const std::size_t plane = image.dim(1) * image.dim(2);
  for (double v : image.data()) {
    if (v < 0.0 || v > 1.0) {
      throw std::invalid_argument("rgb_to_hsv: values must lie in [0,1]");
    }
  }
  Tensor out(image.shape());
  for (std::size_t p = 0; p < plane; ++p) {
    const double r = image[p], g = image[plane + p], b = image[2 * plane + p];
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double delta = mx - mn;
    double hue = 0.0;
    double sat = 0.0;
    if (delta > 0.0) {
      sat = delta / mx;
      if (mx == r) {
        hue = (g - b) / delta;
        if (hue < 0.0) hue += 6.0;
      } else if (mx == g) {
        hue = (b - r) / delta + 2.0;
      } else {
        hue = (r - g) / delta + 4.0;
      }
      hue /= 6.0;
      if (hue >= 1.0) hue -= 1.0;
    }
    out[p] = hue;
    out[plane + p] = sat;
    out[2 * plane + p] = mx;
  }
  return out;
}

Tensor resize_area(const Tensor& image, std::size_t out_h, std::size_t out_w) {
  if (image.rank() != 3 || out_h == 0 || out_w == 0) {
    throw std::invalid_argument("resize_area expects [C,H,W] and a non-empty target");
  }
  const std::size_t channels = image.dim(0), h = image.dim(1), w = image.dim(2);
  // Per-axis overlap weights between output cells and source cells.
  auto weights = [](std::size_t in, std::size_t out) {
    std::vector<std::vector<std::pair<std::size_t, double>>> table(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t o = 0; o < out; ++o) {
      const double lo = static_cast<double>(o) * scale;
      const double hi = static_cast<double>(o + 1) * scale;
      for (auto i = static_cast<std::size_t>(std::floor(lo)); i < in && static_cast<double>(i) < hi;
           ++i) {
        const double overlap =
            std::min(hi, static_cast<double>(i + 1)) - std::max(lo, static_cast<double>(i));
        if (overlap > 0.0) table[o].emplace_back(i, overlap / scale);
      }
    }
    return table;
  };
  const auto wy = weights(h, out_h);
  const auto wx = weights(w, out_w);
  Tensor out({channels, out_h, out_w});
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        double acc = 0.0;
        for (const auto& [y, fy] : wy[oy]) {
          for (const auto& [x, fx] : wx[ox]) {
            acc += fy * fx * image.at(c, y, x);
          }
        }
        out.at(c, oy, ox) = acc;
      }
    }
  }
  return out;
}

Eigen::MatrixXd ZcaModel::transform() const {
  const auto d = mean.size();
  Eigen::MatrixXd t = Eigen::MatrixXd::Identity(d, d) / std::sqrt(epsilon);
  t.noalias() += basis.transpose() * gains.asDiagonal() * basis;
  return t;
}

Eigen::VectorXd ZcaModel::whiten(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd centred = x - mean;
  Eigen::VectorXd proj = basis * centred;
  proj.array() *= gains.array();
  Eigen::VectorXd out = centred / std::sqrt(epsilon);
  out.noalias() += basis.transpose() * proj;
  return out;
}

ZcaModel zca_fit(const std::vector<Tensor>& images, double epsilon) {
  if (images.size() < 2) {
    throw std::invalid_argument("zca_fit needs at least two images");
  }
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("zca_fit: epsilon must be positive");
  }
  const Shape& shape = images.front().shape();
  const auto n = static_cast<Eigen::Index>(images.size());
  const auto d = static_cast<Eigen::Index>(images.front().size());
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Tensor& img = images[static_cast<std::size_t>(i)];
    if (img.shape() != shape) {
      throw std::invalid_argument("zca_fit: images must share one shape");
    }
    x.row(i) = Eigen::Map<const Eigen::RowVectorXd>(img.data().data(), d);
  }
  ZcaModel model;
  model.shape = shape;
  model.epsilon = epsilon;
  model.mean = x.colwise().mean().transpose();
  x.rowwise() -= model.mean.transpose();
  const double denom = static_cast<double>(n - 1);

  Eigen::VectorXd lambda;
  if (n - 1 >= d) {
    const Eigen::MatrixXd cov = (x.transpose() * x) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) {
      throw NumericError("zca_fit: covariance eigendecomposition did not converge");
    }
    model.basis = eig.eigenvectors().transpose();
    lambda = eig.eigenvalues().cwiseMax(0.0);
  } else {
    // Fewer samples than pixels: eigenvectors of the covariance come from the
    // Gram matrix, e = X^T u / sqrt((n-1) mu).
    const Eigen::MatrixXd gram = (x * x.transpose()) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) {
      throw NumericError("zca_fit: Gram eigendecomposition did not converge");
    }
    const double tol = eig.eigenvalues().maxCoeff() * 1e-12;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (eig.eigenvalues()(i) > tol) keep.push_back(i);
    }
    model.basis.resize(static_cast<Eigen::Index>(keep.size()), d);
    lambda.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t r = 0; r < keep.size(); ++r) {
      const double mu = eig.eigenvalues()(keep[r]);
      const auto row = static_cast<Eigen::Index>(r);
      model.basis.row(row) = (x.transpose() * eig.eigenvectors().col(keep[r])).transpose() /
                             std::sqrt(denom * mu);
      lambda(row) = mu;
    }
  }
  model.gains = (lambda.array() + epsilon).rsqrt() - 1.0 / std::sqrt(epsilon);
  if (!model.gains.allFinite() || !model.basis.allFinite()) {
    throw NumericError("zca_fit produced non-finite values");
  }
  return model;
}

Tensor zca_apply(const ZcaModel& model, const Tensor& image, double cutoff) {
  if (image.rank() != 3 || image.dim(0) != 1) {
    throw std::invalid_argument("zca_apply expects a single-channel [1,H,W] image");
  }
  if (image.shape() != model.shape) {
    throw std::invalid_argument("zca_apply: image shape differs from the fitted shape");
  }
  const auto d = static_cast<Eigen::Index>(image.size());
  const Eigen::VectorXd white =
      model.whiten(Eigen::Map<const Eigen::VectorXd>(image.data().data(), d));
  const std::size_t h = image.dim(1), w = image.dim(2);
  const std::size_t plane = h * w;
  Tensor out({2, h, w});
  for (std::size_t p = 0; p < plane; ++p) {
    const double v = white(static_cast<Eigen::Index>(p));
    const double pos = v > 0.0 ? v : 0.0;
    const double neg = v < 0.0 ? -v : 0.0;
    out[p] = pos < cutoff ? 0.0 : pos;
    out[plane + p] = neg < cutoff ? 0.0 : neg;
  }
  return out;
}

}  // namespace spkn
