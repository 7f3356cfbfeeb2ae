#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "spkn/tensor.hpp"

namespace spkn {

/// Laplacian-of-Gaussian kernel of side 2*ceil(3*sigma)+1, shifted to zero
/// mean and scaled so the largest magnitude is 1. The centre is negative.
Tensor log_kernel(double sigma);

/// A bank of LoG kernels, zero-padded (centred) to a common odd side so
/// they fit one [F,1,s,s] tensor. Padding does not change the response.
struct FilterBank {
  std::vector<double> sigmas;
  Tensor kernels;
  double cutoff = 0.0;

  static FilterBank make(std::vector<double> sigmas, double cutoff);
  std::size_t size() const noexcept { return sigmas.size(); }
};

/// Same-padded LoG filtering of every channel followed by on/off
/// rectification and the cutoff. Output channel (f*C + c)*2 + p holds
/// polarity p (0 = positive part, 1 = negated negative part) of filter f on
/// input channel c.
Tensor filter_rectify(const Tensor& image, const FilterBank& bank);

/// Hexcone RGB -> HSV on [3,H,W] with all channels in [0,1]; hue is
/// scaled to [0,1).
Tensor rgb_to_hsv(const Tensor& image);

/// Area-averaging resize of a [C,H,W] image.
Tensor resize_area(const Tensor& image, std::size_t out_h, std::size_t out_w);

/// ZCA whitening W = E diag(1/sqrt(lambda+eps)) E^T about `mean`.
///
/// Stored in the low-rank form W = I/sqrt(eps) + B^T diag(gains) B where the
/// rows of B are covariance eigenvectors; when there are fewer images than
/// pixels only the non-trivial eigenvectors are kept.
struct ZcaModel {
  Shape shape;  // per-image shape the model was fitted on
  Eigen::VectorXd mean;
  Eigen::MatrixXd basis;
  Eigen::VectorXd gains;
  double epsilon = 1e-2;

  // Dense D x D transform. Only sensible for small D.
  Eigen::MatrixXd transform() const;
  Eigen::VectorXd whiten(const Eigen::VectorXd& x) const;
};

ZcaModel zca_fit(const std::vector<Tensor>& images, double epsilon);

/// Whitens one image, then splits it into rectified positive and negative
/// channels and zeroes values below `cutoff`. Output is [2,H,W].
Tensor zca_apply(const ZcaModel& model, const Tensor& image, double cutoff);

}  // namespace spkn
