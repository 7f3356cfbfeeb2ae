#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "spkn/classify.hpp"

using namespace spkn;

namespace {

struct Blobs {
  Eigen::MatrixXd x;
  std::vector<int> y;
};

Blobs blobs(std::mt19937_64& rng, int classes, int per_class, double spread) {
  std::normal_distribution<double> g(0.0, spread);
  Blobs b;
  b.x.resize(classes * per_class, 2);
  for (int c = 0; c < classes; ++c) {
    const double a = 2.0 * M_PI * c / classes;
    for (int i = 0; i < per_class; ++i) {
      const int r = c * per_class + i;
      b.x(r, 0) = std::cos(a) + g(rng);
      b.x(r, 1) = std::sin(a) + g(rng);
      b.y.push_back(c);
    }
  }
  return b;
}

}  // namespace

TEST_CASE("separable blobs are learned exactly") {
  std::mt19937_64 rng(1);
  const Blobs b = blobs(rng, 2, 100, 0.1);
  SvmHyper h;
  h.reg_lambda = 1e-3;
  const LinearModel m = svm_train(b.x, b.y, h);
  CHECK(m.classes() == 2);
  CHECK(accuracy(predict(m, b.x), b.y) == 1.0);
  const Blobs three = blobs(rng, 3, 60, 0.1);
  CHECK(accuracy(predict(svm_train(three.x, three.y, h), three.x), three.y) == 1.0);
}

TEST_CASE("identical inputs give chance accuracy") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Constant(200, 3, 0.7);
  std::vector<int> y(200);
  for (int i = 0; i < 200; ++i) y[i] = i % 2;
  const LinearModel m = svm_train(x, y, SvmHyper{});
  CHECK(accuracy(predict(m, x), y) == doctest::Approx(0.5));
}

TEST_CASE("training is deterministic") {
  std::mt19937_64 rng(2);
  const Blobs b = blobs(rng, 4, 50, 0.5);
  SvmHyper h;
  h.seed = 9;
  const LinearModel a = svm_train(b.x, b.y, h), c = svm_train(b.x, b.y, h);
  CHECK(a.weights == c.weights);
  CHECK(a.bias == c.bias);
  h.seed = 10;
  CHECK(svm_train(b.x, b.y, h).weights != a.weights);
}

TEST_CASE("objective decreases over epochs") {
  std::mt19937_64 rng(3);
  const Blobs b = blobs(rng, 3, 40, 0.6);
  SvmHyper h;
  h.reg_lambda = 1e-2;
  double prev = 1e300;
  for (int e = 1; e <= 12; ++e) {
    h.epochs = e;
    const double obj = svm_objective(svm_train(b.x, b.y, h), b.x, b.y);
    CHECK(obj <= prev * 1.05);
    prev = std::min(prev, obj);
  }
}

TEST_CASE("classifier argument checks") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 2);
  CHECK_THROWS_AS(svm_train(x, std::vector<int>{0, 0, 0, 0}, SvmHyper{}), std::invalid_argument);
  CHECK_THROWS_AS(svm_train(x, std::vector<int>{0, 1, 2}, SvmHyper{}), std::invalid_argument);
  CHECK_THROWS_AS(svm_train(x, std::vector<int>{0, 1, -1, 1}, SvmHyper{}), std::invalid_argument);
  const LinearModel m = svm_train(x, std::vector<int>{0, 1, 0, 1}, SvmHyper{});
  CHECK_THROWS_AS(predict(m, Eigen::MatrixXd::Random(2, 3)), std::invalid_argument);
  CHECK_THROWS_AS(accuracy(std::vector<int>{1}, std::vector<int>{1, 2}), std::invalid_argument);
}

TEST_CASE("prediction rules") {
  const std::vector<int> y{0, 3, 2, 1};
  CHECK(accuracy(y, y) == 1.0);
  CHECK(accuracy(y, std::vector<int>{1, 0, 0, 0}) == 0.0);
  Eigen::MatrixXd s(3, 3);
  s << 1, 2, 2, 5, 1, 5, -1, -3, -2;
  CHECK(predict_scores(s) == std::vector<int>{1, 0, 0});
  CHECK(predict_scores(s * 4.5) == predict_scores(s));
}

TEST_CASE("random fourier features") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 0.5);
  Eigen::MatrixXd x(12, 5);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  const double gamma = 0.7;
  const Eigen::MatrixXd z = rff_expand(x, 4096, gamma, 11);
  CHECK(z.cols() == 4096);
  for (int i = 0; i < 12; ++i) {
    CHECK(z.row(i).squaredNorm() == doctest::Approx(1.0).epsilon(0.05));
    for (int j = 0; j < 12; ++j) {
      const double want = std::exp(-gamma * (x.row(i) - x.row(j)).squaredNorm());
      CHECK(std::abs(z.row(i).dot(z.row(j)) - want) < 0.05);
    }
  }
  const Eigen::MatrixXd flat = rff_expand(x, 512, 0.0, 1);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j) CHECK(flat.row(i).dot(flat.row(j)) == doctest::Approx(1.0));
  CHECK_THROWS_AS(rff_expand(x, 7, gamma, 1), std::invalid_argument);
  CHECK(rff_expand(x, 64, gamma, 5) == rff_expand(x, 64, gamma, 5));
}
