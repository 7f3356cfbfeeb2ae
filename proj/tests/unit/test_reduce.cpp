#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "../oracles.hpp"
#include "spkn/reduce.hpp"

using namespace spkn;

namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd x(n, d);
  // Column scales spread the spectrum so the top-k set is well separated.
  for (Eigen::Index j = 0; j < d; ++j) {
    const double s = 1.0 + 3.0 * std::exp(-0.2 * static_cast<double>(j));
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = s * g(rng);
  }
  return x;
}

Eigen::MatrixXd covariance(const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
  return c.transpose() * c / static_cast<double>(x.rows() - 1);
}

}  // namespace

TEST_CASE("pca on a line") {
  Eigen::MatrixXd x(5, 2);
  x << 1, 1, 2, 2, 3, 3, -1, -1, 0.5, 0.5;
  const PcaModel m = pca_fit(x, 1);
  CHECK(m.components(0, 0) == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(m.components(0, 1) == doctest::Approx(1 / std::sqrt(2.0)));
  const PcaModel both = pca_fit(x, 2);
  CHECK(std::abs(both.explained_variance(1)) < 1e-12);
}

TEST_CASE("pca argument checks") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 3);
  CHECK_THROWS_AS(pca_fit(x, 0), std::invalid_argument);
  CHECK_THROWS_AS(pca_fit(x, 4), std::invalid_argument);
  CHECK_THROWS_AS(pca_fit(Eigen::MatrixXd::Random(1, 3), 1), std::invalid_argument);
  CHECK_THROWS_AS(pca_transform(pca_fit(x, 2), Eigen::MatrixXd::Random(2, 4)),
                  std::invalid_argument);
}

TEST_CASE("isotropic data has unit variances") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd x(20000, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  const PcaModel m = pca_fit(x, 4);
  for (int i = 0; i < 4; ++i) CHECK(m.explained_variance(i) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("pca matches the Jacobi oracle") {
  std::mt19937_64 rng(77);
  const Eigen::MatrixXd x = random_matrix(rng, 200, 50);
  const PcaModel m = pca_fit(x, 10);
  const Eigen::MatrixXd cov = covariance(x);
  auto [vals, vecs] =
      oracle::jacobi_eigen(std::vector<double>(cov.data(), cov.data() + cov.size()), 50);
  const Eigen::MatrixXd centred = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd got = pca_transform(m, x);
  for (int r = 0; r < 10; ++r) {
    CHECK(m.explained_variance(r) == doctest::Approx(vals[r]).epsilon(1e-9));
    Eigen::Map<const Eigen::VectorXd> e(vecs[r].data(), 50);
    Eigen::VectorXd want = centred * e;
    if (want.dot(got.col(r)) < 0) want = -want;
    CHECK((got.col(r) - want).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("gram route equals covariance route") {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd x = random_matrix(rng, 30, 80);  // D > N: Gram route
  const PcaModel m = pca_fit(x, 12);
  const Eigen::MatrixXd cov = covariance(x);
  auto [vals, vecs] =
      oracle::jacobi_eigen(std::vector<double>(cov.data(), cov.data() + cov.size()), 80);
  for (int r = 0; r < 12; ++r) {
    CHECK(m.explained_variance(r) == doctest::Approx(vals[r]).epsilon(1e-9));
    Eigen::Map<const Eigen::VectorXd> e(vecs[r].data(), 80);
    CHECK(std::abs(m.components.row(r).dot(e)) == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("pca invariants") {
  std::mt19937_64 rng(5);
  for (Eigen::Index d : {10, 60}) {
    const Eigen::MatrixXd x = random_matrix(rng, 40, d);
    const PcaModel m = pca_fit(x, 8);
    const Eigen::MatrixXd gram = m.components * m.components.transpose();
    CHECK((gram - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-9);
    for (int r = 1; r < 8; ++r) CHECK(m.explained_variance(r) <= m.explained_variance(r - 1));
    for (int r = 0; r < 8; ++r) {
      Eigen::Index arg;
      m.components.row(r).cwiseAbs().maxCoeff(&arg);
      CHECK(m.components(r, arg) > 0.0);
    }
    const Eigen::MatrixXd pc = covariance(pca_transform(m, x));
    for (int i = 0; i < 8; ++i) {
      CHECK(pc(i, i) == doctest::Approx(m.explained_variance(i)).epsilon(1e-6));
      for (int j = 0; j < 8; ++j)
        if (i != j) CHECK(std::abs(pc(i, j)) < 1e-6 * pc(0, 0));
    }
    const Eigen::MatrixXd at_mean = pca_transform(m, x.colwise().mean());
    CHECK(at_mean.cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("full rank transform preserves distances") {
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd x = random_matrix(rng, 30, 6);
  const Eigen::MatrixXd z = pca_transform(pca_fit(x, 6), x);
  for (int i = 0; i < 30; ++i)
    for (int j = i + 1; j < 30; ++j)
      CHECK((z.row(i) - z.row(j)).norm() == doctest::Approx((x.row(i) - x.row(j)).norm()));
}

TEST_CASE("reconstruction error does not grow with k") {
  std::mt19937_64 rng(10);
  const Eigen::MatrixXd x = random_matrix(rng, 50, 12);
  double prev = 1e300;
  for (Eigen::Index k = 1; k <= 12; ++k) {
    const PcaModel m = pca_fit(x, k);
    const Eigen::MatrixXd back =
        (pca_transform(m, x) * m.components).rowwise() + m.mean.transpose();
    const double err = (back - x).squaredNorm();
    CHECK(err <= prev + 1e-9);
    prev = err;
  }
  CHECK(prev < 1e-12);
}

TEST_CASE("rank deficient data still yields orthonormal components") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(5, 9);
  x.col(2).setConstant(3.0);
  for (Eigen::Index k : {1, 4}) {
    const PcaModel m = pca_fit(x, k);
    CHECK((m.components * m.components.transpose() - Eigen::MatrixXd::Identity(k, k))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK(m.explained_variance.cwiseAbs().maxCoeff() == 0.0);
  }
  Eigen::MatrixXd one = Eigen::MatrixXd::Zero(4, 10);
  one(0, 3) = 1.0;
  const PcaModel m = pca_fit(one, 3);
  CHECK(std::abs(m.components(0, 3)) == doctest::Approx(1.0));
  CHECK(m.explained_variance(1) == 0.0);
}
