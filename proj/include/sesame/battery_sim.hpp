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
#include <vector>

#include "sesame/trace_sim.hpp"

namespace sesame {

/// The three smart-battery interface families: instant discharge current,
/// low-pass filtered current, and remaining capacity only.
enum class InterfaceKind { Instant, Filtered, Capacity };

std::string to_string(InterfaceKind kind);
InterfaceKind interface_kind_from_string(const std::string& s);

struct BatteryInterfaceModel {
  InterfaceKind kind = InterfaceKind::Instant;
  double reading_rate_hz = 1.0;
  /// Relative std-dev of multiplicative Gaussian noise on each internal sample.
  double noise_sigma = 0.0;
  /// Filtered kind: the report is the mean of the last `filter_taps` internal
  /// samples spanning `filter_window_s`.
  double filter_window_s = 16.0;
  std::size_t filter_taps = 10;
  /// LSB in amperes (instant, filtered) or coulombs (capacity); 0 disables.
  double quantization = 0.0;
  double voltage_v = 5.0;
  /// Internal sampling rate; 0 means "same as the reading rate". Ignored for
  /// the filtered kind, whose internal rate is taps / window.
  double internal_rate_hz = 0.0;
  /// Time between the end of an internal sample and the moment it becomes
  /// visible to readers.
  double latency_s = 0.0;
  double initial_capacity_c = 1.0e5;
  std::uint64_t seed = 0;

  void validate() const;
  double internal_period_s() const;
};

/// Current (A) for instant/filtered kinds, remaining capacity (C) for the
/// capacity kind.
struct BatteryReading {
  double t_s = 0.0;
  double value = 0.0;
};

/// A reading stream at a fixed period. Current readings at t = k * period
/// describe the preceding period; capacity readings start at t = 0.
struct ReadingStream {
  InterfaceKind kind = InterfaceKind::Instant;
  double period_s = 1.0;
  double voltage_v = 5.0;
  std::vector<BatteryReading> readings;

  double rate_hz() const { return 1.0 / period_s; }
};

ReadingStream sample_instant(const Trace& trace, const BatteryInterfaceModel& model);
ReadingStream sample_filtered(const Trace& trace, const BatteryInterfaceModel& model);
ReadingStream sample_capacity(const Trace& trace, const BatteryInterfaceModel& model);

/// Dispatch on `model.kind`.
ReadingStream sample_interface(const Trace& trace, const BatteryInterfaceModel& model);

/// Lower the reading rate by an integral factor. Current streams average each
/// group of readings; capacity streams keep every k-th reading so that
/// differencing still yields the mean current.
ReadingStream average_to_rate(const ReadingStream& stream, double target_rate_hz);

/// Interface energy estimate for windows of `interval_s` starting at
/// `start_s`, usable at any rate. Windows shorter than the reading period
/// take the current of the reading that covers them.
std::vector<double> held_interface_energy(const ReadingStream& stream, double interval_s, double start_s,
                                          double span_s);

struct RmsResult {
  double rms = 0.0;
  std::size_t used = 0;
  /// Intervals skipped because their true energy was not positive.
  std::size_t excluded = 0;

  double accuracy() const { return 1.0 - rms; }
};

/// sqrt(mean(((estimate - truth) / truth)^2)) over intervals with truth > 0.
RmsResult rms_relative_error(std::span<const double> estimates, std::span<const double> truth);

}  // namespace sesame
