/*
 *  Copyright (C) 2026 The Sesame Toolkit Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sesame/battery_sim.hpp"
#include "sesame/collector.hpp"

namespace sesame {

enum class FitMethod { TLS, OLS };

std::string to_string(FitMethod m);
FitMethod fit_method_from_string(const std::string& s);

// ---------------------------------------------------------------------------
// Predictor transformation
// ---------------------------------------------------------------------------

/// Orthonormal change of basis for the predictors.
///
/// `rows` is l x n: row k is the k-th singular vector of the (centered,
/// scaled) predictor matrix, sign-canonicalized so its largest-magnitude
/// entry is positive. `means`/`scales` undo the column normalization.
struct PCABasis {
  std::vector<std::string> ids;
  Eigen::MatrixXd rows;
  Eigen::VectorXd singular_values;
  Eigen::VectorXd means;
  Eigen::VectorXd scales;

  std::size_t l() const { return static_cast<std::size_t>(rows.rows()); }
  std::size_t n() const { return static_cast<std::size_t>(rows.cols()); }

  /// m x n original predictors -> m x l transformed predictors.
  Eigen::MatrixXd transform(const Eigen::MatrixXd& X) const;
  /// Inverse of transform when l == n.
  Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& Z) const;

  bool operator==(const PCABasis& o) const;
};

struct PcaOptions {
  bool center = true;
  bool scale = true;
};

struct PcaResult {
  PCABasis basis;
  Eigen::MatrixXd Z;
  /// Indices (into the input columns) that entered the SVD.
  std::vector<std::size_t> kept;
  std::vector<std::string> dropped_ids;
  std::vector<std::string> warnings;
};

/// SVD-based predictor transformation keeping all components (l = n).
/// Zero-variance columns are dropped with a warning before the SVD.
PcaResult pca_transform(const Eigen::MatrixXd& X, std::span<const std::string> ids, const PcaOptions& opts = {});
PcaResult pca_transform(const DesignMatrix& dm, const PcaOptions& opts = {});

/// Keep the top `l` components.
PCABasis select_components(const PCABasis& basis, std::size_t l);

// ---------------------------------------------------------------------------
// Regression primitives
// ---------------------------------------------------------------------------

/// Total least squares with an intercept column: the right singular vector of
/// [1 | X | y] for the smallest singular value, normalized on its last entry.
/// Returns (intercept, slopes...). Throws DegenerateFitError if that entry
/// vanishes (|v| < 1e-12).
Eigen::VectorXd fit_tls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Ordinary least squares with an intercept column, via column-pivoting QR.
/// Throws DegenerateFitError on a rank-deficient design.
Eigen::VectorXd fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// ---------------------------------------------------------------------------
// Energy model
// ---------------------------------------------------------------------------

/// Affine energy model in power form: predicted mean power over any interval
/// is (1, z) . beta, where z is the (optionally transformed) predictor vector
/// in rate form; the energy over an interval of t seconds is t times that.
/// Because predictors are rates, beta does not depend on the interval length.
struct EnergyModel {
  std::vector<std::string> predictor_ids;
  std::optional<PCABasis> basis;
  /// beta(0) in watts, beta(k) in watts per unit of predictor k.
  Eigen::VectorXd beta;
  double training_interval_s = 100.0;
  FitMethod method = FitMethod::TLS;
  double training_error = 0.0;
  /// Original predictors that carry non-negligible weight in the basis.
  std::vector<std::string> weighted_ids;
  bool below_target = false;

  std::size_t transformed_count() const { return static_cast<std::size_t>(beta.size()) - 1; }
  /// Mean power for one predictor vector in `predictor_ids` order.
  double power(std::span<const double> x) const;
  /// Coefficients expressed per training interval (joules per unit predictor).
  Eigen::VectorXd coefficients_per_interval() const { return beta * training_interval_s; }

  bool operator==(const EnergyModel& o) const;
};

/// Energy estimate for an interval of `t_s` seconds (t <= training interval).
double compress(const EnergyModel& model, std::span<const double> x, double t_s);

/// Energy estimate for every row of `dm`, matching columns by id.
Eigen::VectorXd predict_energy(const EnergyModel& model, const DesignMatrix& dm);

struct StretchRange {
  double min_s = 50.0;
  double max_s = 100.0;
};

/// Aggregate base-rate predictors to `t_low_s` rows and pair them with the
/// interface energy over the same windows.
DesignMatrix stretch(const DesignMatrix& base, const ReadingStream& readings, double t_low_s,
                     const StretchRange& range = {});

struct FitOptions {
  FitMethod method = FitMethod::TLS;
  /// Number of principal components; nullopt fits the original predictors.
  std::optional<std::size_t> components;
  /// Column-norm threshold on the basis for `weighted_ids`.
  double weight_threshold = 0.1;
};

/// Fit one model on stretched data. Zero-variance predictors are dropped
/// (their effect moves into the intercept). Columns are centered and scaled
/// before the SVD; for TLS the response is standardized too. A degenerate TLS
/// problem falls back to OLS and is reported in `warnings`.
EnergyModel fit_model(const DesignMatrix& stretched, const FitOptions& opts = {},
                      std::vector<std::string>* warnings = nullptr);

/// Fit at l = n, then lower l while 1 - training error stays >= target and
/// return the smallest acceptable l. If even l = n misses the target the
/// l = n model is returned with `below_target` set.
EnergyModel iterate_construction(const DesignMatrix& stretched, double accuracy_target, FitOptions opts = {},
                                 std::vector<std::string>* warnings = nullptr);

/// Ids of the non-constant columns, in order.
std::vector<std::string> varying_columns(const DesignMatrix& dm);

}  // namespace sesame
