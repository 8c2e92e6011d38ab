/*
 *  Copyright (C) 2026 The Sesame Toolkit Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "sesame/errors.hpp"
#include "sesame/trace_sim.hpp"

using namespace sesame;

namespace {

ComponentStateModel cpu_and_disk() {
  ComponentStateModel m;
  m.base_power_w = 3.0;
  m.components.push_back({"cpu", {{"idle", 1.0}, {"busy", 9.0}}});
  m.components.push_back({"disk", {{"on", 2.0}}});
  return m;
}

WorkloadSpec duty_workload(double duration) {
  return fixture::single_phase({DutyCycleProcess{1.0, 0.5, 1, 0, 0.0}, ConstantProcess{0}}, duration);
}

ComponentStateModel markov_cpu() { return fixture::one_component({0.5, 2.0, 6.0}, 1.0); }

WorkloadSpec markov_workload(std::uint64_t seed) {
  const std::vector<double> dwell{0.05, 0.02, 0.01};
  return fixture::single_phase({MarkovProcess{markov_from_dwell(dwell, 0.001), 0}}, 5.0, seed);
}

}  // namespace

TEST_CASE("single-state system draws its state power every tick") {
  const auto m = fixture::one_component({5.0});
  const Trace t = gen_trace(m, fixture::single_phase({ConstantProcess{0}}, 10.0), 10.0, 0.01);
  REQUIRE(t.size() == 1000);
  for (double p : t.power()) CHECK(p == doctest::Approx(5.0));
}

TEST_CASE("sample count is the ceiling of duration over tick") {
  const auto m = fixture::one_component({1.0});
  const Trace t = gen_trace(m, fixture::single_phase({ConstantProcess{0}}, 1.0), 0.0105, 0.001);
  CHECK(t.size() == 11);
}

TEST_CASE("duty-cycled cpu plus always-on disk averages to the closed form") {
  const Trace t = gen_trace(cpu_and_disk(), duty_workload(20.0), 20.0, 0.001);
  // 3 W base + 2 W disk + half of idle and half of busy
  const double expected = 3.0 + 2.0 + (1.0 + 9.0) / 2.0;
  for (std::size_t period = 0; period < 20; ++period) {
    const double e = oracle::tick_energy(t, period * 1000, (period + 1) * 1000);
    CHECK(e == doctest::Approx(expected).epsilon(1e-12));
  }
  for (const auto& [start, e] : true_energy(t, 1.0)) CHECK(e == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("seeded markov traces are bit-identical") {
  const Trace a = gen_trace(markov_cpu(), markov_workload(17), 5.0);
  const Trace b = gen_trace(markov_cpu(), markov_workload(17), 5.0);
  const Trace c = gen_trace(markov_cpu(), markov_workload(18), 5.0);
  REQUIRE(a.size() == b.size());
  CHECK(std::equal(a.power().begin(), a.power().end(), b.power().begin()));
  CHECK(std::equal(a.states(0).begin(), a.states(0).end(), b.states(0).begin()));
  CHECK_FALSE(std::equal(a.power().begin(), a.power().end(), c.power().begin()));
}

TEST_CASE("markov rows that do not sum to one are rejected") {
  const auto m = fixture::one_component({1.0, 2.0});
  const TransitionMatrix bad{{0.9, 0.2}, {0.5, 0.5}};
  CHECK_THROWS_AS(gen_trace(m, fixture::single_phase({MarkovProcess{bad, 0}}, 1.0), 1.0), ConfigError);
}

TEST_CASE("markov_from_dwell gives the requested mean dwell") {
  const std::vector<double> dwell{0.2, 0.05};
  const auto P = markov_from_dwell(dwell, 0.001);
  // Per-tick exit probability of an exponential holding time.
  CHECK(P[0][0] == doctest::Approx(std::exp(-0.001 / 0.2)).epsilon(1e-12));
  CHECK(P[1][0] == doctest::Approx(1.0 - std::exp(-0.001 / 0.05)).epsilon(1e-12));
  for (const auto& row : P) {
    double s = 0.0;
    for (double v : row) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("true_energy on a constant trace") {
  const Trace t = fixture::power_trace(std::vector<double>(300000, 5.0));
  const auto e = true_energy(t, 100.0);
  REQUIRE(e.size() == 3);
  for (const auto& [start, j] : e) CHECK(j == doctest::Approx(500.0).epsilon(1e-12));
}

TEST_CASE("true_energy over the whole trace equals the tick sum") {
  const Trace t = gen_trace(markov_cpu(), markov_workload(3), 5.0);
  const auto e = true_energy(t, 5.0);
  REQUIRE(e.size() == 1);
  CHECK(e[0].second == doctest::Approx(oracle::tick_energy(t, 0, t.size())).epsilon(1e-12));
}

TEST_CASE("partition additivity across interval lengths") {
  const Trace t = gen_trace(markov_cpu(), markov_workload(5), 5.0);
  for (double interval : {0.01, 0.1, 0.5, 1.0}) {
    double sum = 0.0;
    for (const auto& [start, e] : true_energy(t, interval)) sum += e;
    CHECK(sum == doctest::Approx(oracle::tick_energy(t, 0, t.size())).epsilon(1e-9));
  }
}

TEST_CASE("interval that is not a tick multiple is an alignment error") {
  const Trace t = fixture::power_trace(std::vector<double>(1000, 1.0));
  CHECK_THROWS_AS(true_energy(t, 0.0015), AlignmentError);
}

TEST_CASE("residencies close to the interval length for every component") {
  const Trace t = gen_trace(cpu_and_disk(), duty_workload(3.0), 3.0);
  const auto r = t.residencies(250, 1750);
  double cpu = 0.0, disk = 0.0;
  for (const auto& s : r) {
    CHECK(s.residency_s >= 0.0);
    CHECK(s.residency_s <= 1.5 + 1e-12);
    (s.component == 0 ? cpu : disk) += s.residency_s;
  }
  CHECK(cpu == doctest::Approx(1.5));
  CHECK(disk == doctest::Approx(1.5));
}

TEST_CASE("ground truth is exactly linear in state residencies") {
  const ComponentStateModel m = markov_cpu();
  const Trace t = gen_trace(m, markov_workload(9), 5.0);
  for (TickIndex w = 0; w < 5; ++w) {
    double predicted = m.base_power_w * 1.0;
    for (const auto& s : t.residencies(w * 1000, (w + 1) * 1000)) {
      predicted += m.components[s.component].states[s.state].power_w * s.residency_s;
    }
    CHECK(predicted == doctest::Approx(t.energy_j(w * 1000, (w + 1) * 1000)).epsilon(1e-12));
  }
}

TEST_CASE("trace samples expose one-hot residency") {
  const Trace t = gen_trace(cpu_and_disk(), duty_workload(1.0), 1.0);
  const TraceSample s = t.sample(100);
  REQUIRE(s.residency.size() == 3);
  CHECK(s.residency[0] + s.residency[1] == 1.0);
  CHECK(s.residency[2] == 1.0);
  CHECK(s.power_w == doctest::Approx(3.0 + 2.0 + 9.0));
}

// ---------------------------------------------------------------------------

TEST_CASE("fast-updating predictor read without delay matches the truth") {
  const Trace t = gen_trace(markov_cpu(), markov_workload(4), 5.0);
  PredictorSpec p{"busy", "busy", 0, {0.0, 1.0, 1.0}};
  const auto obs = observe_predictors(t, std::span<const PredictorSpec>(&p, 1), 100.0);
  const auto& s = obs.stream("busy");
  const auto truth = true_predictor_values(t, p, 0.01, 0.0, 5.0);
  REQUIRE(s.ticks.size() >= truth.size() + 1);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double observed = (s.values[i + 1] - s.values[i]) / 0.01;
    CHECK(observed == doctest::Approx(truth[i]).epsilon(1e-9));
  }
}

TEST_CASE("250 Hz updates read at 100 Hz stay within one update quantum") {
  std::vector<std::uint8_t> states;
  for (int i = 0; i < 10000; ++i) states.push_back(((i / 37) % 2) ? 1 : 0);
  const Trace t = fixture::state_trace(states, 1.0, 3.0);
  PredictorSpec p{"busy", "busy", 0, {0.0, 1.0}};
  p.update_rate_hz = 250.0;
  const auto obs = observe_predictors(t, std::span<const PredictorSpec>(&p, 1), 100.0);
  const auto& s = obs.stream("busy");
  const auto truth = true_predictor_values(t, p, 0.01, 0.0, 10.0);
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < s.values.size() && i < truth.size(); ++i) {
    const double observed = (s.values[i + 1] - s.values[i]) / 0.01;
    worst = std::max(worst, std::abs(observed - truth[i]));
  }
  // The visible counter lags by less than one 4 ms update, at each end of the
  // 10 ms window.
  CHECK(worst <= 0.4 + 1e-9);
  CHECK(worst > 0.0);
}

TEST_CASE("delayed predictor correlates best at its delay") {
  std::vector<std::uint8_t> states;
  std::mt19937_64 rng(11);
  std::uint8_t cur = 0;
  for (int i = 0; i < 60000; ++i) {
    if (rng() % 400 == 0) cur ^= 1;
    states.push_back(cur);
  }
  const Trace t = fixture::state_trace(states, 0.0, 2.0);
  PredictorSpec p{"disk", "disk", 0, {0.0, 1.0}};
  p.delay_s = 0.5;
  const auto obs = observe_predictors(t, std::span<const PredictorSpec>(&p, 1), 100.0);
  const auto& s = obs.stream("disk");
  std::vector<double> observed;
  for (std::size_t i = 0; i + 1 < s.values.size(); ++i) observed.push_back((s.values[i + 1] - s.values[i]) / 0.01);
  const auto truth = true_predictor_values(t, p, 0.01, 0.0, 60.0);
  observed.resize(truth.size());
  std::size_t best = 0;
  double best_c = -2.0;
  for (std::size_t lag = 0; lag <= 100; ++lag) {
    const double c = oracle::lagged_correlation(truth, observed, lag);
    if (c > best_c) {
      best_c = c;
      best = lag;
    }
  }
  CHECK(best == 50);
}

TEST_CASE("event-driven predictor reports level changes only") {
  std::vector<std::uint8_t> states(10000, 0);
  std::fill(states.begin() + 5000, states.end(), 1);
  const Trace t = fixture::state_trace(states, 0.5, 1.5);
  PredictorSpec p{"brightness", "brightness", 0, {0.3, 1.0}};
  p.policy = PollPolicy::EventDriven;
  const auto obs = observe_predictors(t, std::span<const PredictorSpec>(&p, 1), 100.0);
  const auto& s = obs.stream("brightness");
  REQUIRE(s.ticks.size() == 2);
  CHECK(s.ticks[0] == 0);
  CHECK(s.values[0] == 0.3);
  CHECK(s.ticks[1] == 5000);
  CHECK(s.values[1] == 1.0);
}

TEST_CASE("unknown stream id is a lookup error") {
  const Trace t = fixture::power_trace(std::vector<double>(100, 1.0));
  PredictorSpec p{"x", "x", 0, {1.0}};
  const auto obs = observe_predictors(t, std::span<const PredictorSpec>(&p, 1), 100.0);
  CHECK_THROWS_AS(obs.stream("nope"), LookupError);
}
