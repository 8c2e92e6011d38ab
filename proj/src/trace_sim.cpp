/*
 *  Copyright (C) 2026 The Sesame Toolkit Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#include "sesame/trace_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace sesame {

namespace {

constexpr double kRowSumTolerance = 1e-9;

void validate_matrix(const TransitionMatrix& m, std::size_t states, const std::string& where) {
  if (m.size() != states) {
    throw ConfigError(where + ": transition matrix has " + std::to_string(m.size()) +
                      " rows, component has " + std::to_string(states) + " states");
  }
  for (std::size_t r = 0; r < m.size(); ++r) {
    if (m[r].size() != states) throw ConfigError(where + ": transition row " + std::to_string(r) + " has wrong width");
    double sum = 0.0;
    for (double p : m[r]) {
      if (p < 0.0) throw ConfigError(where + ": negative transition probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      throw ConfigError(where + ": transition row " + std::to_string(r) + " sums to " + std::to_string(sum));
    }
  }
}

std::size_t step_markov(const std::vector<double>& row, std::size_t current, double u) {
  // Fast path for the overwhelmingly common "stay" outcome.
  if (u < row[current]) return current;
  u -= row[current];
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (j == current) continue;
    if (u < row[j]) return j;
    u -= row[j];
  }
  // Rounding left a sliver of probability mass; stay put.
  return current;
}

struct PhaseCursor {
  std::size_t segment = 0;
  std::size_t phase = 0;
  TickIndex phase_end = 0;
};

}  // namespace

// ---------------------------------------------------------------------------

void ComponentStateModel::validate() const {
  if (components.empty()) throw ConfigError("system model needs at least one component");
  if (base_power_w < 0.0) throw ConfigError("base power must be non-negative");
  for (const auto& c : components) {
    if (c.states.empty()) throw ConfigError("component '" + c.name + "' has no states");
    if (c.states.size() > 255) throw ConfigError("component '" + c.name + "' has more than 255 states");
    for (const auto& s : c.states) {
      if (!(s.power_w >= 0.0)) throw ConfigError("state '" + c.name + "." + s.name + "' has negative power");
    }
  }
}

std::size_t ComponentStateModel::component_index(const std::string& name) const {
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (components[i].name == name) return i;
  }
  throw ConfigError("unknown component '" + name + "'");
}

std::size_t ComponentStateModel::state_count() const {
  std::size_t n = 0;
  for (const auto& c : components) n += c.states.size();
  return n;
}

void WorkloadSpec::validate(const ComponentStateModel& model) const {
  if (segments.empty()) throw ConfigError("workload has no segments");
  double last_start = -1.0;
  for (const auto& seg : segments) {
    if (seg.start_s <= last_start) throw ConfigError("workload segments must start in increasing order");
    last_start = seg.start_s;
    if (seg.phases.empty()) throw ConfigError("workload segment has no phases");
    if (seg.jitter < 0.0 || seg.jitter >= 1.0) throw ConfigError("phase jitter must lie in [0, 1)");
    for (const auto& ph : seg.phases) {
      if (!(ph.duration_s > 0.0)) throw ConfigError("phase '" + ph.name + "' must have positive duration");
      if (ph.processes.size() != model.components.size()) {
        throw ConfigError("phase '" + ph.name + "' must define one process per component");
      }
      for (std::size_t c = 0; c < ph.processes.size(); ++c) {
        const std::size_t k = model.components[c].states.size();
        const std::string where = "phase '" + ph.name + "', component '" + model.components[c].name + "'";
        std::visit(
            [&](const auto& p) {
              using P = std::decay_t<decltype(p)>;
              if constexpr (std::is_same_v<P, ConstantProcess>) {
                if (p.state >= k) throw ConfigError(where + ": state out of range");
              } else if constexpr (std::is_same_v<P, DutyCycleProcess>) {
                if (!(p.period_s > 0.0) || p.duty < 0.0 || p.duty > 1.0) {
                  throw ConfigError(where + ": duty cycle needs period > 0 and duty in [0, 1]");
                }
                if (p.on_state >= k || p.off_state >= k) throw ConfigError(where + ": state out of range");
              } else if constexpr (std::is_same_v<P, MarkovProcess>) {
                validate_matrix(p.transition, k, where);
                if (p.initial_state >= k) throw ConfigError(where + ": initial state out of range");
              } else {
                if (p.driver >= c) throw ConfigError(where + ": coupled process must follow an earlier component");
                const std::size_t driver_states = model.components[p.driver].states.size();
                if (p.by_driver_state.size() != driver_states) {
                  throw ConfigError(where + ": need one transition matrix per driver state");
                }
                for (const auto& m : p.by_driver_state) validate_matrix(m, k, where);
                if (p.initial_state >= k) throw ConfigError(where + ": initial state out of range");
              }
            },
            ph.processes[c]);
      }
    }
  }
}

TransitionMatrix markov_from_dwell(std::span<const double> mean_dwell_s, double tick_s,
                                   const TransitionMatrix& jump) {
  const std::size_t k = mean_dwell_s.size();
  if (k == 0) throw ConfigError("Markov process needs at least one state");
  if (!jump.empty() && jump.size() != k) throw ConfigError("jump matrix must have one row per state");
  TransitionMatrix m(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    if (!(mean_dwell_s[i] > 0.0)) throw ConfigError("mean dwell times must be positive");
    if (k == 1) {
      m[i][i] = 1.0;
      continue;
    }
    const double leave = -std::expm1(-tick_s / mean_dwell_s[i]);
    std::vector<double> dest(k, 0.0);
    if (jump.empty()) {
      for (std::size_t j = 0; j < k; ++j) dest[j] = (j == i) ? 0.0 : 1.0 / static_cast<double>(k - 1);
    } else {
      if (jump[i].size() != k) throw ConfigError("jump row has wrong width");
      double sum = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        dest[j] = (j == i) ? 0.0 : jump[i][j];
        if (dest[j] < 0.0) throw ConfigError("negative jump probability");
        sum += dest[j];
      }
      if (!(sum > 0.0)) throw ConfigError("jump row has no destination");
      for (double& d : dest) d /= sum;
    }
    for (std::size_t j = 0; j < k; ++j) m[i][j] = leave * dest[j];
    // Assign the stay probability last so the row sums to one to rounding.
    double off = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j != i) off += m[i][j];
    }
    m[i][i] = 1.0 - off;
  }
  return m;
}

// ---------------------------------------------------------------------------

Trace::Trace(double tick_s, std::vector<std::size_t> state_counts)
    : tick_s_(tick_s), state_counts_(std::move(state_counts)), states_(state_counts_.size()) {}

void Trace::reserve(std::size_t ticks) {
  power_w_.reserve(ticks);
  for (auto& s : states_) s.reserve(ticks);
}

void Trace::push_back(double power_w, std::span<const std::uint8_t> states) {
  power_w_.push_back(power_w);
  for (std::size_t c = 0; c < states_.size(); ++c) states_[c].push_back(states[c]);
}

TraceSample Trace::sample(std::size_t tick) const {
  TraceSample s;
  s.t_s = static_cast<double>(tick) * tick_s_;
  s.power_w = power_w_.at(tick);
  s.residency.reserve(std::accumulate(state_counts_.begin(), state_counts_.end(), std::size_t{0}));
  for (std::size_t c = 0; c < states_.size(); ++c) {
    for (std::size_t j = 0; j < state_counts_[c]; ++j) s.residency.push_back(states_[c][tick] == j ? 1.0 : 0.0);
  }
  return s;
}

std::vector<StateResidency> Trace::residencies(TickIndex begin, TickIndex end) const {
  if (begin < 0 || end > static_cast<TickIndex>(size()) || begin > end) {
    throw ArgumentError("residency window outside the trace");
  }
  std::vector<StateResidency> out;
  const double start_s = static_cast<double>(begin) * tick_s_;
  const double end_s = static_cast<double>(end) * tick_s_;
  for (std::size_t c = 0; c < states_.size(); ++c) {
    std::vector<std::int64_t> counts(state_counts_[c], 0);
    for (TickIndex i = begin; i < end; ++i) ++counts[states_[c][static_cast<std::size_t>(i)]];
    for (std::size_t j = 0; j < counts.size(); ++j) {
      out.push_back({c, j, static_cast<double>(counts[j]) * tick_s_, start_s, end_s});
    }
  }
  return out;
}

double Trace::energy_j(TickIndex begin, TickIndex end) const {
  if (begin < 0 || end > static_cast<TickIndex>(size()) || begin > end) {
    throw ArgumentError("energy window outside the trace");
  }
  double sum = 0.0;
  for (TickIndex i = begin; i < end; ++i) sum += power_w_[static_cast<std::size_t>(i)];
  return sum * tick_s_;
}

// ---------------------------------------------------------------------------

Trace gen_trace(const ComponentStateModel& model, const WorkloadSpec& workload, double duration_s,
                double tick_s) {
  model.validate();
  workload.validate(model);
  if (!(tick_s > 0.0)) throw ConfigError("tick must be positive");
  if (!(duration_s >= tick_s)) throw ConfigError("duration must be at least one tick");

  const auto n_ticks = static_cast<TickIndex>(std::ceil(duration_s / tick_s - 1e-9));
  const std::size_t nc = model.components.size();

  std::vector<std::size_t> counts(nc);
  std::vector<std::vector<double>> power(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    counts[c] = model.components[c].states.size();
    for (const auto& s : model.components[c].states) power[c].push_back(s.power_w);
  }

  Trace trace(tick_s, counts);
  trace.reserve(static_cast<std::size_t>(n_ticks));

  std::mt19937_64 rng(workload.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<TickIndex> segment_start(workload.segments.size());
  for (std::size_t s = 0; s < workload.segments.size(); ++s) {
    segment_start[s] = static_cast<TickIndex>(std::llround(workload.segments[s].start_s / tick_s));
  }

  auto phase_length = [&](const WorkloadSegment& seg, std::size_t phase) {
    double d = seg.phases[phase].duration_s;
    if (seg.jitter > 0.0) d *= 1.0 + seg.jitter * (2.0 * unit(rng) - 1.0);
    return std::max<TickIndex>(1, static_cast<TickIndex>(std::llround(d / tick_s)));
  };
  auto first_phase = [&](const WorkloadSegment& seg) -> std::size_t {
    if (seg.order == PhaseOrder::Shuffle) {
      return static_cast<std::size_t>(unit(rng) * static_cast<double>(seg.phases.size())) % seg.phases.size();
    }
    return 0;
  };

  PhaseCursor cursor;
  // Segments whose start precedes the first tick are skipped to the last such one.
  while (cursor.segment + 1 < workload.segments.size() && segment_start[cursor.segment + 1] <= 0) ++cursor.segment;
  cursor.phase = first_phase(workload.segments[cursor.segment]);
  cursor.phase_end = phase_length(workload.segments[cursor.segment], cursor.phase);

  std::vector<std::uint8_t> state(nc, 0);
  bool first_tick = true;

  for (TickIndex i = 0; i < n_ticks; ++i) {
    if (cursor.segment + 1 < workload.segments.size() && i >= segment_start[cursor.segment + 1]) {
      ++cursor.segment;
      const auto& seg = workload.segments[cursor.segment];
      cursor.phase = first_phase(seg);
      cursor.phase_end = i + phase_length(seg, cursor.phase);
    } else if (i >= cursor.phase_end) {
      const auto& seg = workload.segments[cursor.segment];
      if (seg.order == PhaseOrder::Shuffle) {
        cursor.phase = static_cast<std::size_t>(unit(rng) * static_cast<double>(seg.phases.size())) % seg.phases.size();
      } else {
        cursor.phase = (cursor.phase + 1) % seg.phases.size();
      }
      cursor.phase_end = i + phase_length(seg, cursor.phase);
    }
    const auto& phase = workload.segments[cursor.segment].phases[cursor.phase];

    double p = model.base_power_w;
    for (std::size_t c = 0; c < nc; ++c) {
      std::size_t s = state[c];
      std::visit(
          [&](const auto& proc) {
            using P = std::decay_t<decltype(proc)>;
            if constexpr (std::is_same_v<P, ConstantProcess>) {
              s = proc.state;
            } else if constexpr (std::is_same_v<P, DutyCycleProcess>) {
              const TickIndex period = std::max<TickIndex>(1, std::llround(proc.period_s / tick_s));
              const auto on = static_cast<TickIndex>(std::llround(proc.duty * static_cast<double>(period)));
              const TickIndex offset = std::llround(proc.offset_s / tick_s);
              const TickIndex pos = ((i + offset) % period + period) % period;
              s = pos < on ? proc.on_state : proc.off_state;
            } else if constexpr (std::is_same_v<P, MarkovProcess>) {
              s = first_tick ? proc.initial_state : step_markov(proc.transition[s], s, unit(rng));
            } else {
              if (first_tick) {
                s = proc.initial_state;
              } else {
                const auto& m = proc.by_driver_state[state[proc.driver]];
                s = step_markov(m[s], s, unit(rng));
              }
            }
          },
          phase.processes[c]);
      state[c] = static_cast<std::uint8_t>(s);
      p += power[c][s];
    }
    first_tick = false;
    trace.push_back(p, state);
  }
  return trace;
}

std::vector<std::pair<double, double>> true_energy(const Trace& trace, double interval_s) {
  const TickIndex width = ticks_for(interval_s, trace.tick_s(), "energy interval");
  if (width < 1) throw AlignmentError("energy interval must span at least one tick");
  const TickIndex windows = static_cast<TickIndex>(trace.size()) / width;
  std::vector<std::pair<double, double>> out;
  out.reserve(static_cast<std::size_t>(windows));
  for (TickIndex w = 0; w < windows; ++w) {
    out.emplace_back(static_cast<double>(w * width) * trace.tick_s(), trace.energy_j(w * width, (w + 1) * width));
  }
  return out;
}

std::vector<double> true_energy_values(const Trace& trace, double interval_s, double start_s, double span_s) {
  const TickIndex width = ticks_for(interval_s, trace.tick_s(), "energy interval");
  const TickIndex start = ticks_for(start_s, trace.tick_s(), "window start");
  const TickIndex span = ticks_for(span_s, trace.tick_s(), "window span");
  if (width < 1) throw AlignmentError("energy interval must span at least one tick");
  if (start + span > static_cast<TickIndex>(trace.size())) throw ArgumentError("energy span exceeds the trace");
  const TickIndex windows = span / width;
  std::vector<double> out(static_cast<std::size_t>(windows));
  const auto p = trace.power();
  for (TickIndex w = 0; w < windows; ++w) {
    double sum = 0.0;
    const TickIndex b = start + w * width;
    for (TickIndex i = b; i < b + width; ++i) sum += p[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(w)] = sum * trace.tick_s();
  }
  return out;
}

// ---------------------------------------------------------------------------

void PredictorSpec::validate(const ComponentStateModel& model) const {
  if (id.empty()) throw ConfigError("predictor id must not be empty");
  if (component >= model.components.size()) throw ConfigError("predictor '" + id + "' refers to an unknown component");
  if (state_values.size() != model.components[component].states.size()) {
    throw ConfigError("predictor '" + id + "' needs one value per component state");
  }
  if (!(update_rate_hz > 0.0)) throw ConfigError("predictor '" + id + "' update rate must be positive");
  if (!(delay_s >= 0.0)) throw ConfigError("predictor '" + id + "' delay must be non-negative");
}

const PredictorStream& ObservedPredictors::stream(const std::string& id) const {
  for (const auto& s : streams) {
    if (s.id == id) return s;
  }
  throw LookupError("unknown predictor id '" + id + "'");
}

std::vector<std::string> ObservedPredictors::ids() const {
  std::vector<std::string> out;
  out.reserve(streams.size());
  for (const auto& s : streams) out.push_back(s.id);
  return out;
}

ObservedPredictors observe_predictors(const Trace& trace, std::span<const PredictorSpec> specs, double read_rate_hz) {
  if (!(read_rate_hz > 0.0)) throw ConfigError("read rate must be positive");
  const double tick = trace.tick_s();
  const auto n = static_cast<TickIndex>(trace.size());
  const TickIndex read_period = period_ticks(read_rate_hz, tick, "read rate");

  ObservedPredictors out;
  out.tick_s = tick;
  out.span_ticks = n;

  for (const auto& spec : specs) {
    if (spec.component >= trace.component_count()) throw ConfigError("predictor '" + spec.id + "' refers to an unknown component");
    if (spec.state_values.size() != trace.state_counts()[spec.component]) {
      throw ConfigError("predictor '" + spec.id + "' needs one value per component state");
    }
    const auto states = trace.states(spec.component);
    const TickIndex delay = ticks_for(spec.delay_s, tick, "predictor delay");

    PredictorStream stream;
    stream.id = spec.id;
    stream.kind = spec.kind;
    stream.policy = spec.policy;

    if (spec.policy == PollPolicy::EventDriven) {
      auto level_at = [&](TickIndex k) {
        const TickIndex src = std::max<TickIndex>(0, k - delay);
        return spec.state_values[states[static_cast<std::size_t>(src)]];
      };
      double current = level_at(0);
      stream.ticks.push_back(0);
      stream.values.push_back(current);
      for (TickIndex k = 1; k < n; ++k) {
        const double v = level_at(k);
        if (v != current) {
          current = v;
          stream.ticks.push_back(k);
          stream.values.push_back(v);
        }
      }
    } else {
      const TickIndex update = period_ticks(spec.update_rate_hz, tick, "predictor update rate");
      const TickIndex step = spec.policy == PollPolicy::PolledFast ? read_period : update;
      // Visible counter at read instant k reflects activity up to the most
      // recent update instant, minus the reporting delay.
      double cumulative = 0.0;
      TickIndex integrated = 0;
      for (TickIndex k = 0; k <= n; k += step) {
        const TickIndex upto = std::max<TickIndex>(0, (k / update) * update - delay);
        while (integrated < upto) {
          cumulative += spec.state_values[states[static_cast<std::size_t>(integrated)]] * tick;
          ++integrated;
        }
        stream.ticks.push_back(k);
        stream.values.push_back(cumulative);
      }
    }
    out.streams.push_back(std::move(stream));
  }
  return out;
}

std::vector<double> true_predictor_values(const Trace& trace, const PredictorSpec& spec, double interval_s,
                                          double start_s, double span_s) {
  const double tick = trace.tick_s();
  const TickIndex width = ticks_for(interval_s, tick, "predictor interval");
  const TickIndex start = ticks_for(start_s, tick, "window start");
  const TickIndex span = ticks_for(span_s, tick, "window span");
  if (start + span > static_cast<TickIndex>(trace.size())) throw ArgumentError("predictor span exceeds the trace");
  const auto states = trace.states(spec.component);
  const TickIndex windows = span / width;
  std::vector<double> out(static_cast<std::size_t>(windows));
  for (TickIndex w = 0; w < windows; ++w) {
    double sum = 0.0;
    const TickIndex b = start + w * width;
    for (TickIndex i = b; i < b + width; ++i) sum += spec.state_values[states[static_cast<std::size_t>(i)]];
    out[static_cast<std::size_t>(w)] = sum * tick / interval_s;
  }
  return out;
}

}  // namespace sesame
