/*
 *  Copyright (C) 2026 The Sesame Toolkit Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#include "sesame/scenario.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace sesame {

using nlohmann::json;

namespace {

constexpr std::uint64_t kBatterySeedSalt = 0x9e3779b97f4a7c15ULL;

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type");
  }
}

const json& need(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
  return j.at(key);
}

std::size_t state_ref(const json& j, const Component& c, const std::string& where) {
  if (j.is_number_unsigned() || j.is_number_integer()) {
    const auto v = j.get<std::int64_t>();
    if (v < 0 || static_cast<std::size_t>(v) >= c.states.size()) throw ConfigError(where + ": state index out of range");
    return static_cast<std::size_t>(v);
  }
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    for (std::size_t i = 0; i < c.states.size(); ++i) {
      if (c.states[i].name == name) return i;
    }
    throw ConfigError(where + ": component '" + c.name + "' has no state '" + name + "'");
  }
  throw ConfigError(where + ": state must be a name or an index");
}

TransitionMatrix matrix_from(const json& j, const Component& c, double tick_s, const std::string& where) {
  if (j.contains("transition")) return j.at("transition").get<TransitionMatrix>();
  if (j.contains("dwell_s")) {
    const auto dwell = j.at("dwell_s").get<std::vector<double>>();
    if (dwell.size() != c.states.size()) throw ConfigError(where + ": dwell_s needs one entry per state");
    const auto jump = get_or<TransitionMatrix>(j, "jump", {});
    return markov_from_dwell(dwell, tick_s, jump);
  }
  throw ConfigError(where + ": Markov process needs 'transition' or 'dwell_s'");
}

StateProcess process_from(const json& j, const ComponentStateModel& sys, std::size_t comp, double tick_s,
                          const std::string& where) {
  const Component& c = sys.components[comp];
  const std::string type = get_or<std::string>(j, "type", "constant");
  if (type == "constant") return ConstantProcess{state_ref(need(j, "state", where), c, where)};
  if (type == "duty") {
    DutyCycleProcess p;
    p.period_s = need(j, "period_s", where).get<double>();
    p.duty = need(j, "duty", where).get<double>();
    p.on_state = state_ref(need(j, "on", where), c, where);
    p.off_state = state_ref(need(j, "off", where), c, where);
    p.offset_s = get_or<double>(j, "offset_s", 0.0);
    return p;
  }
  const std::size_t initial = j.contains("initial") ? state_ref(j.at("initial"), c, where) : 0;
  if (type == "markov") return MarkovProcess{matrix_from(j, c, tick_s, where), initial};
  if (type == "coupled") {
    CoupledProcess p;
    p.driver = sys.component_index(need(j, "driver", where).get<std::string>());
    p.initial_state = initial;
    for (const auto& m : need(j, "by_driver_state", where)) p.by_driver_state.push_back(matrix_from(m, c, tick_s, where));
    return p;
  }
  throw ConfigError(where + ": unknown process type '" + type + "'");
}

WorkloadSegment segment_from(const json& j, const ComponentStateModel& sys, double tick_s) {
  WorkloadSegment seg;
  seg.start_s = get_or<double>(j, "start_s", 0.0);
  const std::string order = get_or<std::string>(j, "order", "cycle");
  if (order == "cycle") {
    seg.order = PhaseOrder::Cycle;
  } else if (order == "shuffle") {
    seg.order = PhaseOrder::Shuffle;
  } else {
    throw ConfigError("workload order must be 'cycle' or 'shuffle'");
  }
  seg.jitter = get_or<double>(j, "jitter", 0.0);
  for (const auto& pj : need(j, "phases", "workload")) {
    WorkloadPhase ph;
    ph.name = get_or<std::string>(pj, "name", "phase");
    ph.duration_s = need(pj, "duration_s", "phase '" + ph.name + "'").get<double>();
    const json procs = get_or<json>(pj, "processes", json::object());
    for (const auto& [name, _] : procs.items()) sys.component_index(name);  // reject unknown names
    for (std::size_t c = 0; c < sys.components.size(); ++c) {
      const auto& cname = sys.components[c].name;
      const std::string where = "phase '" + ph.name + "', component '" + cname + "'";
      if (procs.contains(cname)) {
        ph.processes.push_back(process_from(procs.at(cname), sys, c, tick_s, where));
      } else {
        ph.processes.push_back(ConstantProcess{0});
      }
    }
    seg.phases.push_back(std::move(ph));
  }
  return seg;
}

std::vector<ConfigEntry> entries_from(const json& j) {
  std::vector<ConfigEntry> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 3) throw ConfigError("configuration entries must be [category, name, value]");
    out.push_back({e[0].get<std::string>(), e[1].get<std::string>(), e[2].get<std::string>()});
  }
  return out;
}

PollPolicy policy_from(const std::string& s) {
  if (s == "polled-fast") return PollPolicy::PolledFast;
  if (s == "polled-slow") return PollPolicy::PolledSlow;
  if (s == "event-driven") return PollPolicy::EventDriven;
  throw ConfigError("unknown predictor policy '" + s + "'");
}

Scenario parse(const json& root) {
  Scenario sc;
  sc.name = get_or<std::string>(root, "name", "scenario");
  sc.seed = get_or<std::uint64_t>(root, "seed", 1);
  sc.tick_s = get_or<double>(root, "tick_s", 0.001);
  sc.output_dir = get_or<std::string>(root, "output_dir", "out/" + sc.name);

  const json& sys = need(root, "system", "scenario");
  sc.system.base_power_w = get_or<double>(sys, "base_power_w", 0.0);
  for (const auto& cj : need(sys, "components", "system")) {
    Component c;
    c.name = need(cj, "name", "component").get<std::string>();
    for (const auto& sj : need(cj, "states", "component '" + c.name + "'")) {
      c.states.push_back({need(sj, "name", "state").get<std::string>(), need(sj, "power_w", "state").get<double>()});
    }
    sc.system.components.push_back(std::move(c));
  }
  sc.system.validate();

  const json& wl = need(root, "workload", "scenario");
  if (wl.contains("segments")) {
    for (const auto& sj : wl.at("segments")) sc.workload.segments.push_back(segment_from(sj, sc.system, sc.tick_s));
  } else {
    sc.workload.segments.push_back(segment_from(wl, sc.system, sc.tick_s));
  }

  if (root.contains("change")) {
    const json& cj = root.at("change");
    ChangeEvent ev;
    ev.at_s = need(cj, "at_s", "change").get<double>();
    ev.label = get_or<std::string>(cj, "label", "change");
    ev.rekey = get_or<bool>(cj, "rekey", false);
    if (cj.contains("key")) ev.key_updates = entries_from(cj.at("key"));
    if (cj.contains("workload")) {
      WorkloadSegment seg = segment_from(cj.at("workload"), sc.system, sc.tick_s);
      seg.start_s = ev.at_s;
      sc.workload.segments.push_back(std::move(seg));
    }
    sc.change = std::move(ev);
  }

  for (const auto& pj : need(root, "predictors", "scenario")) {
    PredictorSpec p;
    p.id = need(pj, "id", "predictor").get<std::string>();
    p.name = get_or<std::string>(pj, "name", p.id);
    p.component = sc.system.component_index(need(pj, "component", "predictor '" + p.id + "'").get<std::string>());
    const Component& c = sc.system.components[p.component];
    const json& vals = need(pj, "values", "predictor '" + p.id + "'");
    if (vals.is_array()) {
      p.state_values = vals.get<std::vector<double>>();
    } else {
      p.state_values.assign(c.states.size(), 0.0);
      for (const auto& [state, v] : vals.items()) {
        p.state_values[state_ref(json(state), c, "predictor '" + p.id + "'")] = v.get<double>();
      }
    }
    const std::string kind = get_or<std::string>(pj, "kind", "residency");
    if (kind == "residency") {
      p.kind = PredictorKind::Residency;
    } else if (kind == "counter") {
      p.kind = PredictorKind::Counter;
    } else {
      throw ConfigError("predictor '" + p.id + "': kind must be 'residency' or 'counter'");
    }
    p.update_rate_hz = get_or<double>(pj, "update_rate_hz", 1000.0);
    p.delay_s = get_or<double>(pj, "delay_s", 0.0);
    p.policy = policy_from(get_or<std::string>(pj, "policy", "polled-fast"));
    p.validate(sc.system);
    sc.predictors.push_back(std::move(p));
  }

  const json& bj = need(root, "battery", "scenario");
  auto& b = sc.battery;
  b.kind = interface_kind_from_string(need(bj, "kind", "battery").get<std::string>());
  b.reading_rate_hz = need(bj, "reading_rate_hz", "battery").get<double>();
  b.noise_sigma = get_or<double>(bj, "noise_sigma", 0.0);
  b.filter_window_s = get_or<double>(bj, "filter_window_s", 16.0);
  b.filter_taps = get_or<std::size_t>(bj, "filter_taps", 10);
  b.quantization = get_or<double>(bj, "quantization", 0.0);
  b.voltage_v = get_or<double>(bj, "voltage_v", 5.0);
  b.internal_rate_hz = get_or<double>(bj, "internal_rate_hz", 0.0);
  b.latency_s = get_or<double>(bj, "latency_s", 0.0);
  b.initial_capacity_c = get_or<double>(bj, "initial_capacity_c", 1.0e5);
  b.validate();

  const json col = get_or<json>(root, "collector", json::object());
  sc.read_rate_hz = get_or<double>(col, "read_rate_hz", 100.0);
  sc.read_overhead_j = get_or<double>(col, "read_overhead_j", 0.0);

  const json con = get_or<json>(root, "constructor", json::object());
  sc.constructor.t_low_s = get_or<double>(con, "t_low_s", 100.0);
  sc.constructor.l = get_or<std::size_t>(con, "l", 2);
  sc.constructor.fit = fit_method_from_string(get_or<std::string>(con, "fit", "TLS"));
  sc.constructor.regressogram_k = get_or<std::size_t>(con, "regressogram_k", 10);
  sc.constructor.accuracy_target = get_or<double>(con, "accuracy_target", 0.90);
  if (con.contains("stretch_range_s")) {
    const auto r = con.at("stretch_range_s").get<std::vector<double>>();
    if (r.size() != 2) throw ConfigError("stretch_range_s must be [min, max]");
    sc.constructor.stretch_range = {r[0], r[1]};
  }

  const json mgr = get_or<json>(root, "manager", json::object());
  sc.manager.threshold = get_or<double>(mgr, "threshold", 0.10);
  sc.manager.window_s = get_or<double>(mgr, "window_s", 100.0);
  sc.manager.training_windows = get_or<std::size_t>(mgr, "training_windows", 20);
  if (mgr.contains("key")) sc.manager.key = entries_from(mgr.at("key"));

  const json& ex = need(root, "experiment", "scenario");
  sc.experiment = experiment_kind_from_string(need(ex, "kind", "experiment").get<std::string>());
  sc.train_s = get_or<double>(ex, "train_s", sc.train_s);
  sc.eval_s = get_or<double>(ex, "eval_s", sc.eval_s);
  sc.duration_s = get_or<double>(ex, "duration_s", sc.train_s + sc.eval_s);
  if (ex.contains("rate_grid")) sc.rate_grid = ex.at("rate_grid").get<std::vector<double>>();

  sc.reseed(sc.seed);
  sc.validate();
  return sc;
}

}  // namespace

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::ErrorVsRate:
      return "error-vs-rate";
    case ExperimentKind::Molding:
      return "molding";
    case ExperimentKind::Adaptation:
      return "adaptation";
    case ExperimentKind::RegressogramCompare:
      return "regressogram-compare";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  if (s == "error-vs-rate") return ExperimentKind::ErrorVsRate;
  if (s == "molding") return ExperimentKind::Molding;
  if (s == "adaptation") return ExperimentKind::Adaptation;
  if (s == "regressogram-compare") return ExperimentKind::RegressogramCompare;
  throw ConfigError("unknown experiment kind '" + s + "'");
}

void Scenario::reseed(std::uint64_t s) {
  seed = s;
  workload.seed = s;
  battery.seed = s ^ kBatterySeedSalt;
}

void Scenario::validate() const {
  system.validate();
  workload.validate(system);
  battery.validate();
  for (const auto& p : predictors) p.validate(system);
  if (predictors.empty()) throw ConfigError("scenario defines no predictors");
  if (!(read_rate_hz > 0.0)) throw ConfigError("read rate must be positive");
  if (rate_grid.empty()) throw ConfigError("rate grid must not be empty");
  for (double r : rate_grid) {
    if (!(r > 0.0)) throw ConfigError("rate grid entries must be positive");
  }
  if (!(manager.threshold > 0.0)) throw ConfigError("error threshold must be positive");
  if (!(manager.window_s > 0.0)) throw ConfigError("monitor window must be positive");
  if (constructor.l < 1) throw ConfigError("component count l must be at least 1");
  if (constructor.regressogram_k < 1) throw ConfigError("regressogram k must be at least 1");
  if (!(train_s > 0.0) || !(eval_s > 0.0) || !(duration_s > 0.0)) throw ConfigError("experiment spans must be positive");
}

Scenario parse_scenario(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }
  try {
    return parse(root);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario field has the wrong type: ") + e.what());
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open scenario file '" + path.string() + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  Scenario sc = parse_scenario(ss.str());
  return sc;
}

}  // namespace sesame
