/*
 *  Copyright (C) 2026 The Sesame Toolkit Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sesame/battery_sim.hpp"
#include "sesame/manager.hpp"
#include "sesame/scenario.hpp"
#include "sesame/trace_sim.hpp"

namespace sesame {

/// Everything the pipeline sees for one scenario run, plus the ground truth.
struct Simulation {
  Trace trace;
  ObservedPredictors observed;
  ReadingStream readings;
};

/// Generate `duration_s` of trace, predictor streams and interface readings.
/// The per-read collection overhead is charged as extra base power.
Simulation simulate(const Scenario& sc, double duration_s);

struct ErrorRow {
  double rate_hz = 0.0;
  std::string estimator;
  /// Empty when the estimator cannot produce values at this rate.
  std::optional<RmsResult> rms;
};

struct ErrorReport {
  std::string scenario;
  std::string experiment;
  std::uint64_t seed = 0;
  std::vector<ErrorRow> rows;

  const ErrorRow* find(double rate_hz, const std::string& estimator) const;
  /// Distinct estimator names in first-seen order.
  std::vector<std::string> estimators() const;
};

/// CSV `rate_hz,estimator,rms_rel_error,accuracy`; unsupported rows carry
/// the word "unsupported" in both value columns.
void write_report_csv(std::ostream& os, const ErrorReport& report);

/// Raw interface error against ground truth at every grid rate.
ErrorReport run_error_vs_rate(const Scenario& sc);
ErrorReport run_error_vs_rate(const Scenario& sc, const Simulation& sim);

struct MoldingResult {
  ErrorReport report;
  /// Models keyed by estimator name (molded variants only).
  std::vector<std::pair<std::string, EnergyModel>> models;
  /// Model returned by iterate_construction at the configured target.
  EnergyModel iterated;
};

/// Train on [0, train_s) at T_low and evaluate molded variants, the raw
/// interface and a per-rate oracle on [train_s, train_s + eval_s).
MoldingResult run_molding(const Scenario& sc);
MoldingResult run_molding(const Scenario& sc, const Simulation& sim);

struct AdaptationWindow {
  double t_s = 0.0;
  /// Empty before the first model exists or when the interface reads zero.
  std::optional<double> error;
  bool rebuild = false;
  /// "construct", "rebuild", "monitor", "cooldown", "skip" or "wait".
  std::string action;
};

struct AdaptationResult {
  std::vector<AdaptationWindow> windows;
  std::size_t rebuilds = 0;
  ModelTable table;
  bool below_target = false;
};

/// Cold start, monitor per window, rebuild on threshold crossings with a
/// cool-down of one construction dataset.
AdaptationResult run_adaptation(const Scenario& sc, std::ostream* decision_log = nullptr);
AdaptationResult run_adaptation(const Scenario& sc, const Simulation& sim, std::ostream* decision_log = nullptr);

/// CSV `t_s,window_error,rebuild_flag`; windows without an error leave the
/// field empty.
void write_adaptation_csv(std::ostream& os, const AdaptationResult& result);

/// Linear molded model versus a regressogram trained on ground-truth energy
/// at each rate.
ErrorReport run_regressogram_compare(const Scenario& sc);
ErrorReport run_regressogram_compare(const Scenario& sc, const Simulation& sim);

/// Run the scenario's experiment and write its artifacts into `out_dir`.
/// Returns the list of files written.
std::vector<std::filesystem::path> run_scenario(const Scenario& sc, const std::filesystem::path& out_dir);

}  // namespace sesame
