#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace spkn {

struct SvmHyper {
  double reg_lambda = 1e-5;
  int epochs = 20;
  std::uint64_t seed = 1;
};

/// One-vs-rest linear max-margin classifier.
struct LinearModel {
  Eigen::MatrixXd weights;  // [classes, k]
  Eigen::VectorXd bias;     // [classes]
  double reg_lambda = 1e-5;
  int epochs = 20;
  std::uint64_t seed = 1;

  Eigen::Index classes() const { return weights.rows(); }
  Eigen::Index dims() const { return weights.cols(); }
  Eigen::MatrixXd scores(const Eigen::MatrixXd& x) const;
};

/// Pegasos-style stochastic subgradient descent on the regularised hinge
/// loss of every class head: step 1/(lambda t), one seeded shuffle per epoch
/// shared by all heads, projection onto the 1/sqrt(lambda) ball. The bias is
/// a weight on a constant input of 1. The returned model is the average of the
/// final epoch's iterates.
LinearModel svm_train(const Eigen::MatrixXd& x, std::span<const int> y, const SvmHyper& hyper);

/// Regularised hinge objective of one model on a dataset, summed over heads.
double svm_objective(const LinearModel& model, const Eigen::MatrixXd& x, std::span<const int> y);

/// Highest score wins; ties go to the lowest class index.
std::vector<int> predict(const LinearModel& model, const Eigen::MatrixXd& x);
std::vector<int> predict_scores(const Eigen::MatrixXd& scores);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

/// Random Fourier features for the RBF kernel exp(-gamma |a-b|^2):
/// sqrt(2/dims) [cos(Wx), sin(Wx)] with W ~ N(0, 2 gamma I).
Eigen::MatrixXd rff_expand(const Eigen::MatrixXd& x, Eigen::Index dims, double gamma,
                           std::uint64_t seed);

}  // namespace spkn
