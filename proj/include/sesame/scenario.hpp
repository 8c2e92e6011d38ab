/*
 *  Copyright (C) 2026 The Sesame Toolkit Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sesame/battery_sim.hpp"
#include "sesame/constructor.hpp"
#include "sesame/manager.hpp"
#include "sesame/trace_sim.hpp"

namespace sesame {

enum class ExperimentKind { ErrorVsRate, Molding, Adaptation, RegressogramCompare };

std::string to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(const std::string& s);

struct ConstructorConfig {
  double t_low_s = 100.0;
  std::size_t l = 2;
  FitMethod fit = FitMethod::TLS;
  std::size_t regressogram_k = 10;
  double accuracy_target = 0.90;
  StretchRange stretch_range;
};

struct ManagerConfig {
  double threshold = 0.10;
  double window_s = 100.0;
  /// Windows of fresh data gathered before any (re)construction.
  std::size_t training_windows = 20;
  std::vector<ConfigEntry> key;
};

/// A configuration or workload change partway through an adaptation run.
/// The workload switches to `workload` at `at_s`; `key_updates` are applied
/// to the configuration key only when `rekey` is set, otherwise the change
/// is invisible to the model table.
struct ChangeEvent {
  double at_s = 0.0;
  std::string label;
  std::vector<ConfigEntry> key_updates;
  bool rekey = false;
};

struct Scenario {
  std::string name;
  ExperimentKind experiment = ExperimentKind::Molding;
  std::uint64_t seed = 1;
  double tick_s = 0.001;

  ComponentStateModel system;
  WorkloadSpec workload;
  std::vector<PredictorSpec> predictors;
  BatteryInterfaceModel battery;
  /// Rate at which polled-fast predictors are read.
  double read_rate_hz = 100.0;
  /// Energy charged to the system for every predictor read (joules).
  double read_overhead_j = 0.0;

  ConstructorConfig constructor;
  ManagerConfig manager;
  std::optional<ChangeEvent> change;

  /// Molding / regressogram experiments train on [0, train_s) and evaluate on
  /// [train_s, train_s + eval_s). Error-vs-rate and adaptation runs use
  /// duration_s.
  double train_s = 3000.0;
  double eval_s = 2000.0;
  double duration_s = 5000.0;
  std::vector<double> rate_grid = {0.01, 0.1, 0.5, 1.0, 4.0, 10.0, 100.0};

  std::string output_dir = "out";

  /// Re-seed every random source from one value.
  void reseed(std::uint64_t s);
  void validate() const;
};

Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace sesame
