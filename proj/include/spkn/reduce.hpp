#pragma once

#include <cstddef>

#include <Eigen/Core>

namespace spkn {

struct PcaModel {
  Eigen::VectorXd mean;                // [D]
  Eigen::MatrixXd components;          // [k,D], orthonormal rows
  Eigen::VectorXd explained_variance;  // [k], non-increasing

  Eigen::Index input_dims() const { return mean.size(); }
  Eigen::Index output_dims() const { return components.rows(); }
};

/// Top-k principal axes of the rows of `features` (sample covariance with
/// N-1 normalisation). Each component is signed so that its largest-magnitude
/// coordinate is positive.
///
/// Uses the D x D covariance when D <= N and the N x N Gram matrix otherwise;
/// both give the same non-trivial eigenpairs. When the data has fewer than k
/// non-trivial directions the rest are zero-variance orthonormal fillers.
PcaModel pca_fit(const Eigen::MatrixXd& features, Eigen::Index k);

/// (x - mean) * components^T for every row.
Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& features);

}  // namespace spkn
