/*
 *  Copyright (C) 2026 The Sesame Toolkit Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#include "sesame/battery_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace sesame {

namespace {

double quantize(double value, double lsb) {
  if (lsb <= 0.0) return value;
  return std::floor(value / lsb) * lsb;
}

/// Mean-current internal samples, noise applied, in completion order.
std::vector<double> internal_samples(const Trace& trace, const BatteryInterfaceModel& model, TickIndex period) {
  const auto n = static_cast<TickIndex>(trace.size());
  const TickIndex count = n / period;
  std::vector<double> out(static_cast<std::size_t>(count));
  std::mt19937_64 rng(model.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto p = trace.power();
  const double span_s = static_cast<double>(period) * trace.tick_s();
  for (TickIndex k = 0; k < count; ++k) {
    double energy = 0.0;
    for (TickIndex i = k * period; i < (k + 1) * period; ++i) energy += p[static_cast<std::size_t>(i)];
    energy *= trace.tick_s();
    const double current = energy / (model.voltage_v * span_s);
    const double noise = model.noise_sigma > 0.0 ? model.noise_sigma * gauss(rng) : 0.0;
    out[static_cast<std::size_t>(k)] = current * (1.0 + noise);
  }
  return out;
}

/// Index of the newest internal sample visible at tick `t`, or -1.
TickIndex newest_visible(TickIndex t, TickIndex period, TickIndex latency) {
  const TickIndex avail = t - latency;
  if (avail < period) return -1;
  return avail / period - 1;
}

struct Timing {
  TickIndex reading;
  TickIndex internal;
  TickIndex latency;
};

Timing timing_for(const Trace& trace, const BatteryInterfaceModel& model) {
  model.validate();
  const double tick = trace.tick_s();
  return {period_ticks(model.reading_rate_hz, tick, "battery reading rate"),
          ticks_for(model.internal_period_s(), tick, "battery internal period"),
          ticks_for(model.latency_s, tick, "battery latency")};
}

}  // namespace

std::string to_string(InterfaceKind kind) {
  switch (kind) {
    case InterfaceKind::Instant:
      return "instant";
    case InterfaceKind::Filtered:
      return "filtered";
    case InterfaceKind::Capacity:
      return "capacity";
  }
  return "unknown";
}

InterfaceKind interface_kind_from_string(const std::string& s) {
  if (s == "instant") return InterfaceKind::Instant;
  if (s == "filtered") return InterfaceKind::Filtered;
  if (s == "capacity") return InterfaceKind::Capacity;
  throw ConfigError("unknown battery interface kind '" + s + "'");
}

void BatteryInterfaceModel::validate() const {
  if (!(reading_rate_hz > 0.0)) throw ConfigError("battery reading rate must be positive");
  if (!(noise_sigma >= 0.0)) throw ConfigError("battery noise sigma must be non-negative");
  if (!(voltage_v > 0.0)) throw ConfigError("battery voltage must be positive");
  if (!(quantization >= 0.0)) throw ConfigError("battery quantization must be non-negative");
  if (!(latency_s >= 0.0)) throw ConfigError("battery latency must be non-negative");
  if (internal_rate_hz < 0.0) throw ConfigError("battery internal rate must be non-negative");
  if (kind == InterfaceKind::Filtered && (!(filter_window_s > 0.0) || filter_taps < 1)) {
    throw ConfigError("filtered interface needs window > 0 and at least one tap");
  }
}

double BatteryInterfaceModel::internal_period_s() const {
  if (kind == InterfaceKind::Filtered) return filter_window_s / static_cast<double>(filter_taps);
  return internal_rate_hz > 0.0 ? 1.0 / internal_rate_hz : 1.0 / reading_rate_hz;
}

ReadingStream sample_instant(const Trace& trace, const BatteryInterfaceModel& model) {
  if (model.kind != InterfaceKind::Instant) throw ConfigError("sample_instant needs an instant interface");
  const auto timing = timing_for(trace, model);
  const auto samples = internal_samples(trace, model, timing.internal);
  ReadingStream out{model.kind, static_cast<double>(timing.reading) * trace.tick_s(), model.voltage_v, {}};
  const auto n = static_cast<TickIndex>(trace.size());
  for (TickIndex t = timing.reading; t <= n; t += timing.reading) {
    const TickIndex k = newest_visible(t, timing.internal, timing.latency);
    const double v = samples.empty() ? 0.0 : samples[static_cast<std::size_t>(std::max<TickIndex>(k, 0))];
    out.readings.push_back({static_cast<double>(t) * trace.tick_s(), quantize(v, model.quantization)});
  }
  return out;
}

ReadingStream sample_filtered(const Trace& trace, const BatteryInterfaceModel& model) {
  if (model.kind != InterfaceKind::Filtered) throw ConfigError("sample_filtered needs a filtered interface");
  const auto timing = timing_for(trace, model);
  const auto samples = internal_samples(trace, model, timing.internal);
  ReadingStream out{model.kind, static_cast<double>(timing.reading) * trace.tick_s(), model.voltage_v, {}};
  const auto n = static_cast<TickIndex>(trace.size());
  const auto taps = static_cast<TickIndex>(model.filter_taps);
  for (TickIndex t = timing.reading; t <= n; t += timing.reading) {
    const TickIndex k = newest_visible(t, timing.internal, timing.latency);
    double v = 0.0;
    if (k >= 0) {
      const TickIndex first = std::max<TickIndex>(0, k - taps + 1);
      double sum = 0.0;
      for (TickIndex j = first; j <= k; ++j) sum += samples[static_cast<std::size_t>(j)];
      v = sum / static_cast<double>(k - first + 1);
    } else if (!samples.empty()) {
      v = samples.front();
    }
    out.readings.push_back({static_cast<double>(t) * trace.tick_s(), quantize(v, model.quantization)});
  }
  return out;
}

ReadingStream sample_capacity(const Trace& trace, const BatteryInterfaceModel& model) {
  if (model.kind != InterfaceKind::Capacity) throw ConfigError("sample_capacity needs a capacity interface");
  const auto timing = timing_for(trace, model);
  const auto samples = internal_samples(trace, model, timing.internal);
  const double sample_s = static_cast<double>(timing.internal) * trace.tick_s();
  ReadingStream out{model.kind, static_cast<double>(timing.reading) * trace.tick_s(), model.voltage_v, {}};
  const auto n = static_cast<TickIndex>(trace.size());
  double drawn = 0.0;
  TickIndex counted = 0;  // internal samples already subtracted
  for (TickIndex t = 0; t <= n; t += timing.reading) {
    const TickIndex k = newest_visible(t, timing.internal, timing.latency);
    while (counted <= k) {
      drawn += samples[static_cast<std::size_t>(counted)] * sample_s;
      ++counted;
    }
    out.readings.push_back({static_cast<double>(t) * trace.tick_s(),
                            quantize(model.initial_capacity_c - drawn, model.quantization)});
  }
  return out;
}

ReadingStream sample_interface(const Trace& trace, const BatteryInterfaceModel& model) {
  switch (model.kind) {
    case InterfaceKind::Instant:
      return sample_instant(trace, model);
    case InterfaceKind::Filtered:
      return sample_filtered(trace, model);
    case InterfaceKind::Capacity:
      return sample_capacity(trace, model);
  }
  throw ConfigError("unknown interface kind");
}

ReadingStream average_to_rate(const ReadingStream& stream, double target_rate_hz) {
  if (!(target_rate_hz > 0.0)) throw ArgumentError("target rate must be positive");
  const auto factor = integral_ratio(1.0 / target_rate_hz, stream.period_s, "decimation factor");
  ReadingStream out{stream.kind, stream.period_s * static_cast<double>(factor), stream.voltage_v, {}};
  const auto k = static_cast<std::size_t>(factor);
  if (stream.kind == InterfaceKind::Capacity) {
    for (std::size_t i = 0; i < stream.readings.size(); i += k) out.readings.push_back(stream.readings[i]);
    return out;
  }
  for (std::size_t g = 0; g + k <= stream.readings.size(); g += k) {
    double sum = 0.0;
    for (std::size_t i = g; i < g + k; ++i) sum += stream.readings[i].value;
    out.readings.push_back({stream.readings[g + k - 1].t_s, sum / static_cast<double>(k)});
  }
  return out;
}

std::vector<double> held_interface_energy(const ReadingStream& stream, double interval_s, double start_s,
                                          double span_s) {
  // Work on a grid fine enough to hold both the interval and the reading period.
  const double grid = std::min(interval_s, stream.period_s);
  const TickIndex width = ticks_for(interval_s, grid, "interval");
  const TickIndex period = ticks_for(stream.period_s, grid, "reading period");
  if (width % period != 0 && period % width != 0) {
    throw AlignmentError("interval and reading period must nest");
  }
  const TickIndex start = ticks_for(start_s, grid, "window start");
  const TickIndex windows = static_cast<TickIndex>(std::floor(span_s / interval_s + 1e-9));
  const double v = stream.voltage_v;
  const bool capacity = stream.kind == InterfaceKind::Capacity;

  auto reading_index = [&](TickIndex r) -> std::size_t {
    // Current readings are indexed from t = period; capacity from t = 0.
    const TickIndex idx = capacity ? r : r - 1;
    if (idx < 0 || idx >= static_cast<TickIndex>(stream.readings.size())) {
      throw ArgumentError("interface readings do not cover the requested span");
    }
    return static_cast<std::size_t>(idx);
  };
  auto period_current = [&](TickIndex r) {
    // Mean current over the reading period ending at r * period.
    if (capacity) {
      return (stream.readings[reading_index(r - 1)].value - stream.readings[reading_index(r)].value) / stream.period_s;
    }
    return stream.readings[reading_index(r)].value;
  };

  std::vector<double> out(static_cast<std::size_t>(windows));
  for (TickIndex w = 0; w < windows; ++w) {
    const TickIndex a = start + w * width;
    const TickIndex b = a + width;
    double e = 0.0;
    if (width >= period) {
      if (a % period != 0) throw AlignmentError("window start must sit on a reading boundary");
      for (TickIndex r = a / period + 1; r <= b / period; ++r) e += period_current(r) * v * stream.period_s;
    } else {
      const TickIndex r = (b + period - 1) / period;
      e = period_current(r) * v * interval_s;
    }
    out[static_cast<std::size_t>(w)] = e;
  }
  return out;
}

RmsResult rms_relative_error(std::span<const double> estimates, std::span<const double> truth) {
  if (estimates.size() != truth.size()) {
    throw ArgumentError("estimate and truth sequences differ in length (" + std::to_string(estimates.size()) +
                        " vs " + std::to_string(truth.size()) + ")");
  }
  RmsResult r;
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!(truth[i] > 0.0)) {
      ++r.excluded;
      continue;
    }
    const double rel = (estimates[i] - truth[i]) / truth[i];
    sum += rel * rel;
    ++r.used;
  }
  r.rms = r.used > 0 ? std::sqrt(sum / static_cast<double>(r.used)) : 0.0;
  return r;
}

}  // namespace sesame
