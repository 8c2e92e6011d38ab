/*
 *  Copyright (C) 2026 The Sesame Toolkit Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sesame/battery_sim.hpp"
#include "sesame/trace_sim.hpp"

namespace sesame {

/// Predictor aggregates per interval plus, optionally, the paired response.
///
/// Row i covers [t0 + i * interval, t0 + (i + 1) * interval). Every predictor
/// is stored in rate form (residency fraction or events per second), so rows
/// of different lengths are directly comparable. `y` holds joules per row.
struct DesignMatrix {
  double interval_s = 1.0;
  double t0_s = 0.0;
  std::vector<std::string> ids;
  Eigen::MatrixXd X;
  std::optional<Eigen::VectorXd> y;

  std::size_t rows() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(X.cols()); }
  double t_start(std::size_t row) const { return t0_s + static_cast<double>(row) * interval_s; }
  std::size_t column(const std::string& id) const;

  /// Mean power per row (y / interval). Throws if y is absent.
  Eigen::VectorXd power() const;

  /// Keep only the named columns, in the given order.
  DesignMatrix select(std::span<const std::string> keep) const;
};

/// Merge every `factor` consecutive rows: predictors average, responses sum.
/// A trailing partial group is dropped.
DesignMatrix merge_rows(const DesignMatrix& dm, std::size_t factor);

/// Stateful front end over observed predictor streams at one target rate.
/// Counts OS accesses the way the bundled read charges them: one per call,
/// whatever the mask size.
class Collector {
 public:
  Collector(const ObservedPredictors& observed, double target_rate_hz);

  double interval_s() const noexcept { return interval_s_; }

  /// One row per target interval over [start_s, start_s + duration_s).
  DesignMatrix collect(double duration_s, double start_s = 0.0) const;

  /// Coherent snapshot of the masked predictors for the interval containing
  /// `t_s`, in mask order.
  std::vector<double> bundle_read(std::span<const std::string> mask, double t_s);

  std::size_t accesses() const noexcept { return accesses_; }

 private:
  double value(const PredictorStream& s, TickIndex begin, TickIndex end) const;

  const ObservedPredictors* observed_;
  double interval_s_;
  TickIndex width_;
  std::size_t accesses_ = 0;
};

/// Free-function form of Collector::collect.
DesignMatrix collect(const ObservedPredictors& observed, double target_rate_hz, double duration_s,
                     double start_s = 0.0);

/// Energy per `interval_s` window computed from battery readings. Current
/// kinds sum reading * voltage * period; the capacity kind differences the
/// readings at the window edges. A window is credited with the readings whose
/// timestamps close a period inside it.
Eigen::VectorXd aggregate_response(const ReadingStream& readings, double interval_s, double start_s = 0.0,
                                   std::optional<double> span_s = std::nullopt);

/// CSV with header `t_start_s,<ids...>[,y_j]`.
void write_design_csv(std::ostream& os, const DesignMatrix& dm);
DesignMatrix read_design_csv(std::istream& is);

}  // namespace sesame
