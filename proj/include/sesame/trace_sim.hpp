/*
 *  Copyright (C) 2026 The Sesame Toolkit Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sesame/timebase.hpp"

namespace sesame {

// ---------------------------------------------------------------------------
// System model
// ---------------------------------------------------------------------------

struct ComponentState {
  std::string name;
  double power_w = 0.0;
};

struct Component {
  std::string name;
  std::vector<ComponentState> states;
};

/// Ground-truth power generator: each component sits in exactly one state per
/// tick and draws that state's power on top of the always-on base power.
struct ComponentStateModel {
  std::vector<Component> components;
  double base_power_w = 0.0;

  /// Throws ConfigError unless there is at least one component, every
  /// component has at least one state and no power is negative.
  void validate() const;

  std::size_t component_index(const std::string& name) const;
  /// Total number of (component, state) pairs.
  std::size_t state_count() const;
};

/// Time spent by one component in one state over [start_s, end_s).
struct StateResidency {
  std::size_t component = 0;
  std::size_t state = 0;
  double residency_s = 0.0;
  double start_s = 0.0;
  double end_s = 0.0;
};

// ---------------------------------------------------------------------------
// Workload
// ---------------------------------------------------------------------------

using TransitionMatrix = std::vector<std::vector<double>>;

struct ConstantProcess {
  std::size_t state = 0;
};

/// Square wave: `on_state` for the first `duty` fraction of every period.
struct DutyCycleProcess {
  double period_s = 1.0;
  double duty = 0.5;
  std::size_t on_state = 1;
  std::size_t off_state = 0;
  double offset_s = 0.0;
};

/// Per-tick Markov chain. Rows must sum to one.
struct MarkovProcess {
  TransitionMatrix transition;
  std::size_t initial_state = 0;
};

/// Markov chain whose per-tick transition matrix is selected by the current
/// state of another (lower-indexed) component.
struct CoupledProcess {
  std::size_t driver = 0;
  std::vector<TransitionMatrix> by_driver_state;
  std::size_t initial_state = 0;
};

using StateProcess = std::variant<ConstantProcess, DutyCycleProcess, MarkovProcess, CoupledProcess>;

struct WorkloadPhase {
  std::string name;
  double duration_s = 1.0;
  /// One process per component, in component order.
  std::vector<StateProcess> processes;
};

enum class PhaseOrder { Cycle, Shuffle };

/// A run of phases starting at `start_s`. Cycle plays phases in order and
/// repeats; Shuffle draws the next phase uniformly. Phase durations are
/// scaled by a uniform factor in [1 - jitter, 1 + jitter].
struct WorkloadSegment {
  double start_s = 0.0;
  PhaseOrder order = PhaseOrder::Cycle;
  double jitter = 0.0;
  std::vector<WorkloadPhase> phases;
};

struct WorkloadSpec {
  std::vector<WorkloadSegment> segments;
  std::uint64_t seed = 0;

  void validate(const ComponentStateModel& model) const;
};

/// Convert mean dwell times (seconds per state) into a per-tick transition
/// matrix. `jump` gives the destination distribution when leaving a state;
/// an empty `jump` means uniform over the other states.
TransitionMatrix markov_from_dwell(std::span<const double> mean_dwell_s, double tick_s,
                                   const TransitionMatrix& jump = {});

// ---------------------------------------------------------------------------
// Trace
// ---------------------------------------------------------------------------

/// One tick of ground truth.
struct TraceSample {
  double t_s = 0.0;
  /// Residency indicator per (component, state) pair, flattened in component
  /// order. One-hot per component at tick granularity.
  std::vector<double> residency;
  double power_w = 0.0;
};

/// Column-major ground-truth trace on a fixed tick grid.
class Trace {
 public:
  Trace() = default;
  Trace(double tick_s, std::vector<std::size_t> state_counts);

  double tick_s() const noexcept { return tick_s_; }
  std::size_t size() const noexcept { return power_w_.size(); }
  double duration_s() const noexcept { return static_cast<double>(size()) * tick_s_; }
  std::size_t component_count() const noexcept { return states_.size(); }
  const std::vector<std::size_t>& state_counts() const noexcept { return state_counts_; }

  std::span<const double> power() const noexcept { return power_w_; }
  std::span<const std::uint8_t> states(std::size_t component) const { return states_.at(component); }

  TraceSample sample(std::size_t tick) const;

  /// Residency of every (component, state) over ticks [begin, end).
  std::vector<StateResidency> residencies(TickIndex begin, TickIndex end) const;

  /// Exact energy over ticks [begin, end).
  double energy_j(TickIndex begin, TickIndex end) const;

  void push_back(double power_w, std::span<const std::uint8_t> states);
  void reserve(std::size_t ticks);

 private:
  double tick_s_ = 0.001;
  std::vector<std::size_t> state_counts_;
  std::vector<double> power_w_;
  std::vector<std::vector<std::uint8_t>> states_;
};

/// Simulate `duration_s` of the workload on the system model at `tick_s`
/// granularity. Produces ceil(duration / tick) samples; identical seeds give
/// bit-identical traces.
Trace gen_trace(const ComponentStateModel& model, const WorkloadSpec& workload, double duration_s,
                double tick_s = 0.001);

/// Energy per consecutive `interval_s` window. The interval must be an
/// integral multiple of the tick; a trailing partial window is discarded.
std::vector<std::pair<double, double>> true_energy(const Trace& trace, double interval_s);

/// Energy per window as a plain vector, for windows starting at `start_s`.
std::vector<double> true_energy_values(const Trace& trace, double interval_s, double start_s,
                                       double span_s);

// ---------------------------------------------------------------------------
// Predictors
// ---------------------------------------------------------------------------

/// Residency predictors average over an interval; counter predictors count
/// events and are reported as per-second rates.
enum class PredictorKind { Residency, Counter };

enum class PollPolicy { PolledFast, PolledSlow, EventDriven };

struct PredictorSpec {
  std::string id;
  std::string name;
  std::size_t component = 0;
  /// Value per second accrued while the component is in each state
  /// (1.0 for plain residency, events/s for counters, the level for
  /// event-driven settings).
  std::vector<double> state_values;
  PredictorKind kind = PredictorKind::Residency;
  double update_rate_hz = 1000.0;
  double delay_s = 0.0;
  PollPolicy policy = PollPolicy::PolledFast;

  void validate(const ComponentStateModel& model) const;
  /// True per-second predictor value for a given component state.
  double value_for_state(std::size_t state) const { return state_values.at(state); }
};

/// What the collector can see of one predictor.
///
/// Polled predictors are cumulative counters (value-seconds) sampled at
/// `ticks`: the OS refreshes the counter at update instants and the refresh
/// reflects activity up to `delay` earlier. Event-driven predictors are level
/// change points (tick, level) starting with the level at tick 0.
struct PredictorStream {
  std::string id;
  PredictorKind kind = PredictorKind::Residency;
  PollPolicy policy = PollPolicy::PolledFast;
  std::vector<TickIndex> ticks;
  std::vector<double> values;
};

struct ObservedPredictors {
  double tick_s = 0.001;
  TickIndex span_ticks = 0;
  std::vector<PredictorStream> streams;

  const PredictorStream& stream(const std::string& id) const;
  std::vector<std::string> ids() const;
};

/// Read every predictor as the OS would expose it. Polled-fast predictors
/// are sampled at `read_rate_hz`, polled-slow ones at their own update rate,
/// event-driven ones whenever their visible value changes.
ObservedPredictors observe_predictors(const Trace& trace, std::span<const PredictorSpec> specs,
                                      double read_rate_hz);

/// True per-interval predictor value (rate form) straight from the trace, for
/// windows of `interval_s` starting at `start_s`.
std::vector<double> true_predictor_values(const Trace& trace, const PredictorSpec& spec,
                                          double interval_s, double start_s, double span_s);

}  // namespace sesame
