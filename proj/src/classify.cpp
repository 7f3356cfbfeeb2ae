#include "spkn/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace spkn {

Eigen::MatrixXd LinearModel::scores(const Eigen::MatrixXd& x) const {
  if (x.cols() != dims()) {
    throw std::invalid_argument("classifier expects " + std::to_string(dims()) +
                                " features, got " + std::to_string(x.cols()));
  }
  Eigen::MatrixXd s = x * weights.transpose();
  s.rowwise() += bias.transpose();
  return s;
}

namespace {

int class_count(const Eigen::MatrixXd& x, std::span<const int> y) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw std::invalid_argument("svm: feature rows and labels differ in length");
  }
  if (y.empty()) {
    throw std::invalid_argument("svm: empty training set");
  }
  const int lo = *std::min_element(y.begin(), y.end());
  const int hi = *std::max_element(y.begin(), y.end());
  if (lo < 0) {
    throw std::invalid_argument("svm: labels must be non-negative");
  }
  if (lo == hi) {
    throw std::invalid_argument("svm: training data holds a single class");
  }
  const int classes = hi + 1;
  if (static_cast<std::size_t>(classes) > y.size()) {
    throw std::invalid_argument("svm: fewer samples than classes");
  }
  return classes;
}

}  // namespace

LinearModel svm_train(const Eigen::MatrixXd& x, std::span<const int> y, const SvmHyper& hyper) {
  const int classes = class_count(x, y);
  if (!(hyper.reg_lambda > 0.0) || hyper.epochs < 1) {
    throw std::invalid_argument("svm: need reg_lambda > 0 and epochs >= 1");
  }
  const Eigen::Index n = x.rows(), d = x.cols();
  const double lambda = hyper.reg_lambda;
  const double radius = 1.0 / std::sqrt(lambda);

  // Row-major copy with the constant bias input appended.
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMat xa(n, d + 1);
  xa.leftCols(d) = x;
  xa.col(d).setOnes();

  RowMat w = RowMat::Zero(classes, d + 1);
  RowMat avg = RowMat::Zero(classes, d + 1);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(hyper.seed);
  double t = 0.0;

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const bool last = epoch + 1 == hyper.epochs;
    for (Eigen::Index idx : order) {
      t += 1.0;
      const double eta = 1.0 / (lambda * t);
      const auto row = xa.row(idx);
      const int label = y[static_cast<std::size_t>(idx)];
      for (int c = 0; c < classes; ++c) {
        auto wc = w.row(c);
        const double sign = label == c ? 1.0 : -1.0;
        const double margin = sign * wc.dot(row);
        wc *= 1.0 - eta * lambda;
        if (margin < 1.0) wc += (eta * sign) * row;
        const double norm = wc.norm();
        if (norm > radius) wc *= radius / norm;
      }
      if (last) avg += w;
    }
  }
  avg /= static_cast<double>(n);

  LinearModel model;
  model.weights = avg.leftCols(d);
  model.bias = avg.col(d);
  model.reg_lambda = hyper.reg_lambda;
  model.epochs = hyper.epochs;
  model.seed = hyper.seed;
  return model;
}

double svm_objective(const LinearModel& model, const Eigen::MatrixXd& x, std::span<const int> y) {
  const Eigen::MatrixXd s = model.scores(x);
  double loss = 0.0;
  for (Eigen::Index c = 0; c < model.classes(); ++c) {
    double hinge = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double sign = y[static_cast<std::size_t>(i)] == c ? 1.0 : -1.0;
      hinge += std::max(0.0, 1.0 - sign * s(i, c));
    }
    const double reg = model.weights.row(c).squaredNorm() + model.bias(c) * model.bias(c);
    loss += 0.5 * model.reg_lambda * reg + hinge / static_cast<double>(x.rows());
  }
  return loss;
}

std::vector<int> predict_scores(const Eigen::MatrixXd& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c) {
      if (scores(i, c) > scores(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

std::vector<int> predict(const LinearModel& model, const Eigen::MatrixXd& x) {
  return predict_scores(model.scores(x));
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("accuracy: prediction and truth lengths differ");
  }
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

Eigen::MatrixXd rff_expand(const Eigen::MatrixXd& x, Eigen::Index dims, double gamma,
                           std::uint64_t seed) {
  if (dims <= 0 || dims % 2 != 0) {
    throw std::invalid_argument("rff_expand: dims must be positive and even");
  }
  if (!(gamma >= 0.0)) {
    throw std::invalid_argument("rff_expand: gamma must be non-negative");
  }
  const Eigen::Index half = dims / 2;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd dirs(x.cols(), half);
  const double scale = std::sqrt(2.0 * gamma);
  for (Eigen::Index j = 0; j < half; ++j) {
    for (Eigen::Index i = 0; i < x.cols(); ++i) dirs(i, j) = scale * normal(rng);
  }
  const Eigen::MatrixXd proj = x * dirs;
  const double norm = std::sqrt(2.0 / static_cast<double>(dims));
  Eigen::MatrixXd out(x.rows(), dims);
  out.leftCols(half) = norm * proj.array().cos().matrix();
  out.rightCols(half) = norm * proj.array().sin().matrix();
  return out;
}

}  // namespace spkn
