/*
 *  Copyright (C) 2026 The Sesame Toolkit Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#include "sesame/regressogram.hpp"

#include <cmath>
#include <limits>

#include "sesame/errors.hpp"

namespace sesame {

std::optional<std::uint64_t> RegressogramModel::cell_of(std::span<const double> x) const {
  if (x.size() != predictors()) throw SchemaError("regressogram expects " + std::to_string(predictors()) + " predictors");
  std::uint64_t index = 0;
  std::uint64_t stride = 1;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const double lo = lower(jj);
    const double hi = upper(jj);
    if (!(x[j] >= lo && x[j] <= hi)) return std::nullopt;
    std::size_t b = 0;
    if (hi > lo) {
      const double width = (hi - lo) / static_cast<double>(bins);
      b = static_cast<std::size_t>(std::floor((x[j] - lo) / width));
      if (b >= bins) b = bins - 1;  // the upper edge belongs to the last bin
    }
    index += static_cast<std::uint64_t>(b) * stride;
    stride *= static_cast<std::uint64_t>(bins);
  }
  return index;
}

RegressogramModel fit_regressogram(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::size_t k) {
  if (k < 1) throw ArgumentError("regressogram needs at least one bin per predictor");
  if (X.rows() == 0 || y.size() == 0) throw ArgumentError("regressogram needs a non-empty training set");
  if (X.rows() != y.size()) throw SchemaError("X and y differ in row count");
  const double cells = std::pow(static_cast<double>(k), static_cast<double>(X.cols()));
  if (cells > static_cast<double>(std::numeric_limits<std::uint64_t>::max() / 2)) {
    throw ArgumentError("k^n cell count does not fit a 64-bit index");
  }

  RegressogramModel model;
  model.bins = k;
  model.lower = X.colwise().minCoeff().transpose();
  model.upper = X.colwise().maxCoeff().transpose();
  model.fallback = y.mean();

  std::vector<double> row(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) row[static_cast<std::size_t>(j)] = X(i, j);
    auto& cell = model.cells[*model.cell_of(row)];
    ++cell.count;
    cell.sum += y(i);
  }
  for (auto& [index, cell] : model.cells) cell.mean = cell.sum / static_cast<double>(cell.count);
  return model;
}

double predict_regressogram(const RegressogramModel& model, std::span<const double> x) {
  const auto index = model.cell_of(x);
  if (!index) return model.fallback;
  const auto it = model.cells.find(*index);
  return it == model.cells.end() ? model.fallback : it->second.mean;
}

Eigen::VectorXd predict_regressogram(const RegressogramModel& model, const Eigen::MatrixXd& X) {
  Eigen::VectorXd out(X.rows());
  std::vector<double> row(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) row[static_cast<std::size_t>(j)] = X(i, j);
    out(i) = predict_regressogram(model, row);
  }
  return out;
}

}  // namespace sesame
