/*
 *  Copyright (C) 2026 The Sesame Toolkit Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#include <doctest.h>

#include <random>
#include <vector>

#include "oracles.hpp"
#include "sesame/errors.hpp"
#include "sesame/regressogram.hpp"

using namespace sesame;

namespace {

Eigen::MatrixXd uniform(Eigen::Index m, Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd X(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) X(i, j) = u(rng);
  }
  return X;
}

}  // namespace

TEST_CASE("one bin predicts the mean everywhere") {
  const Eigen::MatrixXd X = uniform(50, 2, 1);
  const Eigen::VectorXd y = uniform(50, 1, 2).col(0);
  const RegressogramModel m = fit_regressogram(X, y, 1);
  CHECK(m.cells.size() == 1);
  const Eigen::VectorXd p = predict_regressogram(m, X);
  for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(p(i) == doctest::Approx(y.mean()));
}

TEST_CASE("piecewise-constant truth aligned with the bins is learned exactly") {
  Eigen::MatrixXd X(400, 1);
  Eigen::VectorXd y(400);
  for (int i = 0; i < 400; ++i) {
    X(i, 0) = (i % 100) / 99.0;
    const int cell = std::min(static_cast<int>(X(i, 0) * 4), 3);
    y(i) = 10.0 + 3.0 * cell;
  }
  const RegressogramModel m = fit_regressogram(X, y, 4);
  CHECK((predict_regressogram(m, X) - y).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("training rows predict the brute-force cell means") {
  const Eigen::MatrixXd X = uniform(1000, 2, 3);
  Eigen::VectorXd y = (X.col(0).array().square() + 0.5 * X.col(1).array()).matrix();
  y += 0.05 * uniform(1000, 1, 4).col(0);
  const RegressogramModel m = fit_regressogram(X, y, 10);
  const auto expected = oracle::brute_force_cell_means(X, y, 10);
  const Eigen::VectorXd p = predict_regressogram(m, X);
  for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(p(i) == expected[static_cast<std::size_t>(i)]);
}

TEST_CASE("stored cells are consistent") {
  const Eigen::MatrixXd X = uniform(300, 3, 5);
  const Eigen::VectorXd y = uniform(300, 1, 6).col(0);
  const RegressogramModel m = fit_regressogram(X, y, 5);
  std::size_t total = 0;
  for (const auto& [key, cell] : m.cells) {
    CHECK(cell.count > 0);
    CHECK(cell.mean == doctest::Approx(cell.sum / static_cast<double>(cell.count)));
    total += cell.count;
  }
  CHECK(total == 300);
  CHECK(m.fallback == doctest::Approx(y.mean()));
}

TEST_CASE("out-of-range and empty-cell queries fall back to the global mean") {
  Eigen::MatrixXd X(4, 2);
  X << 0, 0, 1, 1, 0, 1, 0.05, 0.05;
  const Eigen::Vector4d y(1, 2, 3, 5);
  const RegressogramModel m = fit_regressogram(X, y, 10);
  const std::vector<double> outside{2.0, 0.5};
  CHECK(predict_regressogram(m, outside) == doctest::Approx(2.75));
  const std::vector<double> empty{0.5, 0.5};
  CHECK(predict_regressogram(m, empty) == doctest::Approx(2.75));
  const std::vector<double> inside{0.02, 0.02};
  CHECK(predict_regressogram(m, inside) == doctest::Approx(3.0));
  const std::vector<double> corner{0.99, 0.99};
  CHECK(predict_regressogram(m, corner) == doctest::Approx(2.0));
  const std::vector<double> wrong{0.5};
  CHECK_THROWS_AS(predict_regressogram(m, wrong), SchemaError);
}

TEST_CASE("empty training set and zero bins are rejected") {
  CHECK_THROWS_AS(fit_regressogram(Eigen::MatrixXd(0, 2), Eigen::VectorXd(0), 10), ArgumentError);
  CHECK_THROWS_AS(fit_regressogram(uniform(5, 1, 1), Eigen::VectorXd::Ones(5), 0), ArgumentError);
}
