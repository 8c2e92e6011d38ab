/*
 *  Copyright (C) 2026 The Sesame Toolkit Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

// sesame: run evaluation scenarios and export intermediate data.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sesame/collector.hpp"
#include "sesame/csv.hpp"
#include "sesame/errors.hpp"
#include "sesame/experiments.hpp"
#include "sesame/scenario.hpp"

namespace {

enum ExitCode { kOk = 0, kConfig = 1, kInsufficient = 2 };

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::string rate_grid;
  std::optional<double> threshold;
  std::optional<std::size_t> l;
  std::optional<double> t_low;
};

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(sesame::parse_double(item, 0, "--rate-grid"));
  }
  if (out.empty()) throw sesame::ConfigError("--rate-grid needs at least one rate");
  return out;
}

sesame::Scenario load(const std::string& path, const Overrides& o) {
  sesame::Scenario sc = sesame::load_scenario(path);
  if (o.seed) sc.reseed(*o.seed);
  if (!o.rate_grid.empty()) sc.rate_grid = parse_grid(o.rate_grid);
  if (o.threshold) sc.manager.threshold = *o.threshold;
  if (o.l) sc.constructor.l = *o.l;
  if (o.t_low) sc.constructor.t_low_s = *o.t_low;
  sc.validate();
  return sc;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw sesame::ConfigError("cannot write '" + path + "'");
  return os;
}

void export_trace(const sesame::Scenario& sc, double duration, const std::string& path) {
  const sesame::Trace trace = sesame::gen_trace(sc.system, sc.workload, duration, sc.tick_s);
  auto os = open_out(path);
  os << "t_s,power_w";
  for (const auto& p : sc.predictors) os << ',' << p.id;
  os << '\n';
  for (std::size_t i = 0; i < trace.size(); ++i) {
    os << sesame::format_double(static_cast<double>(i) * trace.tick_s()) << ','
       << sesame::format_double(trace.power()[i]);
    for (const auto& p : sc.predictors) os << ',' << sesame::format_double(p.value_for_state(trace.states(p.component)[i]));
    os << '\n';
  }
}

void export_readings(const sesame::Scenario& sc, double duration, const std::string& path) {
  const sesame::Simulation sim = sesame::simulate(sc, duration);
  auto os = open_out(path);
  os << "t_s,value,kind\n";
  const std::string kind = sesame::to_string(sim.readings.kind);
  for (const auto& r : sim.readings.readings) {
    os << sesame::format_double(r.t_s) << ',' << sesame::format_double(r.value) << ',' << kind << '\n';
  }
}

void export_design(const sesame::Scenario& sc, double duration, double rate, bool with_y, const std::string& path) {
  const sesame::Simulation sim = sesame::simulate(sc, duration);
  sesame::DesignMatrix dm = sesame::collect(sim.observed, rate, duration);
  if (with_y) dm.y = sesame::aggregate_response(sim.readings, dm.interval_s, 0.0, dm.rows() * dm.interval_s);
  auto os = open_out(path);
  sesame::write_design_csv(os, dm);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy model construction from coarse battery readings"};
  app.require_subcommand(1);

  Overrides o;
  std::string scenario_path;
  std::string out_dir;

  auto add_overrides = [&](CLI::App* cmd) {
    cmd->add_option("scenario", scenario_path, "Scenario file (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "Override the scenario seed");
  };

  auto* run = app.add_subcommand("run", "Run a scenario and write its reports");
  add_overrides(run);
  run->add_option("--out", out_dir, "Output directory (default: the scenario's)");
  run->add_option("--rate-grid", o.rate_grid, "Comma-separated evaluation rates in Hz");
  run->add_option("--threshold", o.threshold, "Monitoring error threshold");
  run->add_option("--l", o.l, "Principal components kept");
  run->add_option("--tlow", o.t_low, "Stretch interval in seconds");

  double duration = 0.0;
  std::string path;
  auto* trace = app.add_subcommand("export-trace", "Write ground truth as CSV t_s,power_w,<ids>");
  add_overrides(trace);
  trace->add_option("--duration", duration, "Seconds to simulate")->required();
  trace->add_option("-o,--output", path, "CSV path")->required();

  auto* readings = app.add_subcommand("export-readings", "Write interface readings as CSV t_s,value,kind");
  add_overrides(readings);
  readings->add_option("--duration", duration, "Seconds to simulate")->required();
  readings->add_option("-o,--output", path, "CSV path")->required();

  double rate = 1.0;
  bool with_y = false;
  auto* design = app.add_subcommand("export-design", "Write the collected design matrix as CSV");
  add_overrides(design);
  design->add_option("--duration", duration, "Seconds to simulate")->required();
  design->add_option("--rate", rate, "Collection rate in Hz");
  design->add_flag("--with-response", with_y, "Append interface energy per row");
  design->add_option("-o,--output", path, "CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const sesame::Scenario sc = load(scenario_path, o);
    if (*run) {
      const auto dir = out_dir.empty() ? sc.output_dir : out_dir;
      for (const auto& f : sesame::run_scenario(sc, dir)) std::cout << f.string() << '\n';
    } else if (*trace) {
      export_trace(sc, duration, path);
    } else if (*readings) {
      export_readings(sc, duration, path);
    } else if (*design) {
      export_design(sc, duration, rate, with_y, path);
    }
  } catch (const sesame::InsufficientDataError& e) {
    std::cerr << "sesame: insufficient data: " << e.what() << '\n';
    return kInsufficient;
  } catch (const sesame::TruncationError& e) {
    std::cerr << "sesame: insufficient data: " << e.what() << '\n';
    return kInsufficient;
  } catch (const std::exception& e) {
    std::cerr << "sesame: " << e.what() << '\n';
    return kConfig;
  }
  return kOk;
}
