/*
 *  Copyright (C) 2026 The Sesame Toolkit Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sesame/trace_sim.hpp"

namespace fixture {

inline std::filesystem::path scenario(const std::string& name) {
  return std::filesystem::path(SESAME_SCENARIO_DIR) / (name + ".json");
}

/// Single-component trace with the given per-tick power, state = 0.
inline sesame::Trace power_trace(const std::vector<double>& power, double tick_s = 0.001) {
  sesame::Trace t(tick_s, {1});
  const std::uint8_t s = 0;
  t.reserve(power.size());
  for (double p : power) t.push_back(p, std::span<const std::uint8_t>(&s, 1));
  return t;
}

/// Two-state component following `states` tick by tick.
inline sesame::Trace state_trace(const std::vector<std::uint8_t>& states, double off_w, double on_w,
                                 double tick_s = 0.001) {
  sesame::Trace t(tick_s, {2});
  t.reserve(states.size());
  for (auto s : states) t.push_back(s ? on_w : off_w, std::span<const std::uint8_t>(&s, 1));
  return t;
}

inline sesame::ComponentStateModel one_component(std::vector<double> powers, double base = 0.0) {
  sesame::ComponentStateModel m;
  m.base_power_w = base;
  sesame::Component c{"cpu", {}};
  for (std::size_t i = 0; i < powers.size(); ++i) c.states.push_back({"s" + std::to_string(i), powers[i]});
  m.components.push_back(c);
  return m;
}

inline sesame::WorkloadSpec single_phase(std::vector<sesame::StateProcess> procs, double duration_s,
                                         std::uint64_t seed = 1) {
  sesame::WorkloadSpec wl;
  wl.seed = seed;
  sesame::WorkloadSegment seg;
  seg.phases.push_back({"only", duration_s, std::move(procs)});
  wl.segments.push_back(seg);
  return wl;
}

}  // namespace fixture
