#include "spkn/reduce.hpp"

#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

#include "spkn/errors.hpp"

namespace spkn {

namespace {

void fix_sign(Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> v) {
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v(arg) < 0.0) v = -v;
}

}  // namespace

PcaModel pca_fit(const Eigen::MatrixXd& features, Eigen::Index k) {
  const Eigen::Index n = features.rows(), d = features.cols();
  if (n < 2) {
    throw std::invalid_argument("pca_fit needs at least two samples");
  }
  if (k < 1 || k > std::min(n - 1, d)) {
    throw std::invalid_argument("pca_fit: k=" + std::to_string(k) + " must lie in [1, " +
                                std::to_string(std::min(n - 1, d)) + "]");
  }
  PcaModel model;
  model.mean = features.colwise().mean().transpose();
  Eigen::MatrixXd centred = features.rowwise() - model.mean.transpose();
  const double denom = static_cast<double>(n - 1);
  model.components.resize(k, d);
  model.explained_variance.resize(k);

  if (d <= n) {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centred.transpose(), 1.0 / denom);
    cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) {
      throw NumericError("pca_fit: covariance eigendecomposition did not converge");
    }
    // Eigen sorts ascending.
    for (Eigen::Index r = 0; r < k; ++r) {
      model.components.row(r) = eig.eigenvectors().col(d - 1 - r).transpose();
      model.explained_variance(r) = std::max(0.0, eig.eigenvalues()(d - 1 - r));
    }
  } else {
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(centred, 1.0 / denom);
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) {
      throw NumericError("pca_fit: Gram eigendecomposition did not converge");
    }
    const double top = std::max(eig.eigenvalues()(n - 1), 0.0);
    Eigen::Index r = 0;
    for (; r < k; ++r) {
      const double mu = eig.eigenvalues()(n - 1 - r);
      if (!(mu > 1e-12 * top) || top == 0.0) break;
      Eigen::VectorXd v = centred.transpose() * eig.eigenvectors().col(n - 1 - r);
      model.components.row(r) = (v / v.norm()).transpose();
      model.explained_variance(r) = mu;
    }
    // Rank-deficient data: finish with zero-variance axes orthogonal to the
    // ones found, taken from the standard basis by Gram-Schmidt.
    for (Eigen::Index e = 0; r < k && e < d; ++e) {
      Eigen::RowVectorXd v = Eigen::RowVectorXd::Unit(d, e);
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index q = 0; q < r; ++q) {
          v -= v.dot(model.components.row(q)) * model.components.row(q);
        }
      }
      const double norm = v.norm();
      if (norm < 1e-6) continue;
      model.components.row(r) = v / norm;
      model.explained_variance(r) = 0.0;
      ++r;
    }
  }
  for (Eigen::Index r = 0; r < k; ++r) fix_sign(model.components.row(r));
  if (!model.components.allFinite()) {
    throw NumericError("pca_fit produced non-finite components");
  }
  return model;
}

Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& features) {
  if (features.cols() != model.input_dims()) {
    throw std::invalid_argument("pca_transform: expected " +
                                std::to_string(model.input_dims()) + " columns, got " +
                                std::to_string(features.cols()));
  }
  return (features.rowwise() - model.mean.transpose()) * model.components.transpose();
}

}  // namespace spkn
