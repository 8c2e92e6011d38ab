/*
 *  Copyright (C) 2026 The Sesame Toolkit Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace sesame {

/// Histogram regression: the predictor box is cut into k equal-width bins per
/// predictor and each populated cell predicts the mean of its training
/// responses. Only populated cells are stored.
struct RegressogramModel {
  struct Cell {
    std::size_t count = 0;
    double sum = 0.0;
    double mean = 0.0;
  };

  std::size_t bins = 10;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::unordered_map<std::uint64_t, Cell> cells;
  double fallback = 0.0;

  std::size_t predictors() const { return static_cast<std::size_t>(lower.size()); }

  /// Linear cell index for `x`, or nothing if any coordinate is out of range.
  std::optional<std::uint64_t> cell_of(std::span<const double> x) const;
};

RegressogramModel fit_regressogram(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::size_t k = 10);

/// Mean of the matching cell; the global training mean when `x` falls outside
/// the training box or in an empty cell.
double predict_regressogram(const RegressogramModel& model, std::span<const double> x);

Eigen::VectorXd predict_regressogram(const RegressogramModel& model, const Eigen::MatrixXd& X);

}  // namespace sesame
