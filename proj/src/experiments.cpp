/*
 *  Copyright (C) 2026 The Sesame Toolkit Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#include "sesame/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "sesame/collector.hpp"
#include "sesame/constructor.hpp"
#include "sesame/csv.hpp"
#include "sesame/errors.hpp"
#include "sesame/regressogram.hpp"

namespace sesame {

namespace {

constexpr double kRateEps = 1e-9;

RmsResult score(std::span<const double> est, std::span<const double> truth) {
  const std::size_t m = std::min(est.size(), truth.size());
  return rms_relative_error(est.first(m), truth.first(m));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

std::string rate_label(std::size_t l) { return "molded_l" + std::to_string(l); }

/// Best affine predictor in relative-error terms, fitted in-sample.
std::vector<double> oracle_energy(const DesignMatrix& dm, std::span<const double> truth) {
  const auto m = static_cast<Eigen::Index>(std::min<std::size_t>(dm.rows(), truth.size()));
  const auto n = static_cast<Eigen::Index>(dm.cols());
  Eigen::MatrixXd A(m, n + 1);
  A.col(0).setConstant(dm.interval_s);
  A.rightCols(n) = dm.X.topRows(m) * dm.interval_s;
  Eigen::MatrixXd Aw = A;
  Eigen::VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double t = truth[static_cast<std::size_t>(i)];
    if (t > 0.0) {
      Aw.row(i) /= t;
      b(i) = 1.0;
    } else {
      Aw.row(i).setZero();
      b(i) = 0.0;
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Aw);
  qr.setThreshold(1e-12);
  const Eigen::VectorXd coef = qr.solve(b);
  return to_std(A * coef);
}

Eigen::MatrixXd columns_of(const DesignMatrix& dm, const std::vector<std::string>& ids) {
  Eigen::MatrixXd out(dm.X.rows(), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t j = 0; j < ids.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = dm.X.col(dm.column(ids[j]));
  return out;
}

DesignMatrix training_data(const Scenario& sc, const Simulation& sim, double start_s, double span_s) {
  const DesignMatrix base = collect(sim.observed, sc.read_rate_hz, span_s, start_s);
  return stretch(base, sim.readings, sc.constructor.t_low_s, sc.constructor.stretch_range);
}

ErrorRow unsupported(double rate, const std::string& name) { return {rate, name, std::nullopt}; }

}  // namespace

Simulation simulate(const Scenario& sc, double duration_s) {
  ComponentStateModel system = sc.system;
  system.base_power_w += sc.read_overhead_j * sc.read_rate_hz;
  Simulation sim;
  sim.trace = gen_trace(system, sc.workload, duration_s, sc.tick_s);
  sim.observed = observe_predictors(sim.trace, sc.predictors, sc.read_rate_hz);
  sim.readings = sample_interface(sim.trace, sc.battery);
  return sim;
}

// ---------------------------------------------------------------------------

const ErrorRow* ErrorReport::find(double rate_hz, const std::string& estimator) const {
  for (const auto& r : rows) {
    if (r.estimator == estimator && std::abs(r.rate_hz - rate_hz) <= kRateEps * std::max(1.0, rate_hz)) return &r;
  }
  return nullptr;
}

std::vector<std::string> ErrorReport::estimators() const {
  std::vector<std::string> out;
  for (const auto& r : rows) {
    if (std::find(out.begin(), out.end(), r.estimator) == out.end()) out.push_back(r.estimator);
  }
  return out;
}

void write_report_csv(std::ostream& os, const ErrorReport& report) {
  os << "rate_hz,estimator,rms_rel_error,accuracy\n";
  for (const auto& r : report.rows) {
    os << format_double(r.rate_hz) << ',' << r.estimator << ',';
    if (r.rms) {
      os << format_double(r.rms->rms) << ',' << format_double(r.rms->accuracy()) << '\n';
    } else {
      os << "unsupported,unsupported\n";
    }
  }
}

// ---------------------------------------------------------------------------

ErrorReport run_error_vs_rate(const Scenario& sc) { return run_error_vs_rate(sc, simulate(sc, sc.duration_s)); }

ErrorReport run_error_vs_rate(const Scenario& sc, const Simulation& sim) {
  ErrorReport rep{sc.name, to_string(ExperimentKind::ErrorVsRate), sc.seed, {}};
  const double native = sim.readings.rate_hz();
  for (double rate : sc.rate_grid) {
    const double interval = 1.0 / rate;
    if (rate > native * (1.0 + kRateEps)) {
      rep.rows.push_back(unsupported(rate, "interface"));
      continue;
    }
    try {
      const ReadingStream lowered = average_to_rate(sim.readings, rate);
      const auto est = to_std(aggregate_response(lowered, interval, 0.0));
      const auto truth = true_energy_values(sim.trace, interval, 0.0, sc.duration_s);
      rep.rows.push_back({rate, "interface", score(est, truth)});
    } catch (const AlignmentError&) {
      rep.rows.push_back(unsupported(rate, "interface"));
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------

MoldingResult run_molding(const Scenario& sc) { return run_molding(sc, simulate(sc, sc.train_s + sc.eval_s)); }

MoldingResult run_molding(const Scenario& sc, const Simulation& sim) {
  MoldingResult res;
  res.report = {sc.name, to_string(ExperimentKind::Molding), sc.seed, {}};
  const DesignMatrix stretched = training_data(sc, sim, 0.0, sc.train_s);
  const std::size_t n = varying_columns(stretched).size();
  if (n == 0) throw InsufficientDataError("no predictor varies over the training span");

  FitOptions opts;
  opts.method = sc.constructor.fit;
  res.models.emplace_back("molded_no_pca", fit_model(stretched, opts));
  opts.components = n;
  res.models.emplace_back("molded_all_pcs", fit_model(stretched, opts));
  const std::size_t l = std::min(sc.constructor.l, n);
  if (l != n) {
    opts.components = l;
    res.models.emplace_back(rate_label(l), fit_model(stretched, opts));
  }
  if (l != 1 && n != 1) {
    opts.components = 1;
    res.models.emplace_back(rate_label(1), fit_model(stretched, opts));
  }
  FitOptions iter_opts;
  iter_opts.method = sc.constructor.fit;
  res.iterated = iterate_construction(stretched, sc.constructor.accuracy_target, iter_opts);

  for (double rate : sc.rate_grid) {
    const double interval = 1.0 / rate;
    const DesignMatrix dm = collect(sim.observed, rate, sc.eval_s, sc.train_s);
    const auto truth = true_energy_values(sim.trace, interval, sc.train_s, sc.eval_s);
    try {
      const auto iface = held_interface_energy(sim.readings, interval, sc.train_s, sc.eval_s);
      res.report.rows.push_back({rate, "interface", score(iface, truth)});
    } catch (const AlignmentError&) {
      res.report.rows.push_back(unsupported(rate, "interface"));
    }
    for (const auto& [name, model] : res.models) {
      res.report.rows.push_back({rate, name, score(to_std(predict_energy(model, dm)), truth)});
    }
    res.report.rows.push_back({rate, "oracle", score(oracle_energy(dm, truth), truth)});
  }
  return res;
}

// ---------------------------------------------------------------------------

AdaptationResult run_adaptation(const Scenario& sc, std::ostream* decision_log) {
  return run_adaptation(sc, simulate(sc, sc.duration_s), decision_log);
}

AdaptationResult run_adaptation(const Scenario& sc, const Simulation& sim, std::ostream* decision_log) {
  AdaptationResult res;
  ModelTable& table = res.table;
  table.threshold = sc.manager.threshold;
  table.window_s = sc.manager.window_s;

  const double ws = sc.manager.window_s;
  const std::size_t gather = sc.manager.training_windows;
  const double gather_s = static_cast<double>(gather) * ws;
  const auto total = static_cast<std::size_t>(std::floor(sc.duration_s / ws + 1e-9));
  if (total == 0) throw InsufficientDataError("run is shorter than one monitoring window");

  const DesignMatrix windows = collect(sim.observed, 1.0 / ws, static_cast<double>(total) * ws, 0.0);
  const Eigen::VectorXd iface = aggregate_response(sim.readings, ws, 0.0, static_cast<double>(total) * ws);

  std::optional<DecisionLog> log;
  if (decision_log) log.emplace(*decision_log);

  FitOptions opts;
  opts.method = sc.constructor.fit;
  const double target = sc.constructor.accuracy_target;

  ConfigurationKey key(sc.manager.key);
  bool changed = false;
  // Window index at which the current data-gathering phase completes.
  const std::size_t never = std::numeric_limits<std::size_t>::max();
  std::size_t ready_at = never;
  bool cold = table.lookup_or_create(key) == nullptr;
  if (cold) ready_at = gather;
  double trigger_error = 0.0;

  auto fresh = [&](std::size_t end_window) {
    const double end = static_cast<double>(end_window) * ws;
    return [&sc, &sim, end, gather_s] { return training_data(sc, sim, end - gather_s, gather_s); };
  };

  for (std::size_t k = 0; k < total; ++k) {
    const double t = static_cast<double>(k) * ws;
    AdaptationWindow w;
    w.t_s = t;

    if (sc.change && !changed && t >= sc.change->at_s - 1e-9) {
      changed = true;
      if (sc.change->rekey) {
        for (const auto& e : sc.change->key_updates) key = key.with(e.category, e.name, e.value);
        if (table.lookup_or_create(key) == nullptr) {
          cold = true;
          ready_at = k + gather;
        }
      }
    }

    if (ready_at == k) {
      if (cold) {
        const DesignMatrix data = fresh(k)();
        EnergyModel model = iterate_construction(data, target, opts);
        res.below_target = res.below_target || model.below_target;
        table.install(key, std::move(model));
        table.lookup_or_create(key);
        if (log) log->append(t, std::nullopt, table.threshold, "construct");
      } else {
        const RebuildDecision d = maybe_rebuild(table, trigger_error, fresh(k), target, opts);
        res.below_target = res.below_target || d.below_target;
        if (log) log->append(t, trigger_error, table.threshold, d.below_target ? "install-below-target" : "install");
      }
      cold = false;
      ready_at = never;
    }

    const EnergyModel* model = table.active_model();
    if (cold || model == nullptr) {
      w.action = "wait";
      if (log) log->append(t, std::nullopt, table.threshold, w.action);
      res.windows.push_back(std::move(w));
      continue;
    }

    const Eigen::RowVectorXd row = windows.X.row(static_cast<Eigen::Index>(k));
    std::vector<double> xm;
    xm.reserve(model->predictor_ids.size());
    for (const auto& id : model->predictor_ids) xm.push_back(row(static_cast<Eigen::Index>(windows.column(id))));
    const double predicted = model->power(xm) * ws;
    w.error = window_error(predicted, iface(static_cast<Eigen::Index>(k)));

    if (!w.error) {
      w.action = "skip";
      table.record({t, 0.0, true});
    } else if (ready_at != never) {
      w.action = "cooldown";
    } else {
      table.record({t, *w.error, false});
      if (*w.error > table.threshold) {
        w.action = "rebuild";
        w.rebuild = true;
        ++res.rebuilds;
        trigger_error = *w.error;
        ready_at = k + 1 + gather;
      } else {
        w.action = "monitor";
      }
    }
    if (log) log->append(t, w.error, table.threshold, w.action);
    res.windows.push_back(std::move(w));
  }
  return res;
}

void write_adaptation_csv(std::ostream& os, const AdaptationResult& result) {
  os << "t_s,window_error,rebuild_flag\n";
  for (const auto& w : result.windows) {
    os << format_double(w.t_s) << ',';
    if (w.error) os << format_double(*w.error);
    os << ',' << (w.rebuild ? 1 : 0) << '\n';
  }
}

// ---------------------------------------------------------------------------

ErrorReport run_regressogram_compare(const Scenario& sc) {
  return run_regressogram_compare(sc, simulate(sc, sc.train_s + sc.eval_s));
}

ErrorReport run_regressogram_compare(const Scenario& sc, const Simulation& sim) {
  ErrorReport rep{sc.name, to_string(ExperimentKind::RegressogramCompare), sc.seed, {}};
  const DesignMatrix stretched = training_data(sc, sim, 0.0, sc.train_s);
  const std::size_t n = varying_columns(stretched).size();
  if (n == 0) throw InsufficientDataError("no predictor varies over the training span");
  FitOptions opts;
  opts.method = sc.constructor.fit;
  opts.components = std::min(sc.constructor.l, n);
  const EnergyModel linear = fit_model(stretched, opts);

  for (double rate : sc.rate_grid) {
    const double interval = 1.0 / rate;
    const DesignMatrix train = collect(sim.observed, rate, sc.train_s, 0.0);
    const DesignMatrix eval = collect(sim.observed, rate, sc.eval_s, sc.train_s);
    const auto truth = true_energy_values(sim.trace, interval, sc.train_s, sc.eval_s);
    const auto train_truth = true_energy_values(sim.trace, interval, 0.0, sc.train_s);

    rep.rows.push_back({rate, "linear_molded", score(to_std(predict_energy(linear, eval)), truth)});

    const auto ids = varying_columns(train);
    const Eigen::MatrixXd Xtr = columns_of(train, ids);
    const Eigen::MatrixXd Xev = columns_of(eval, ids);
    const auto m = std::min<Eigen::Index>(Xtr.rows(), static_cast<Eigen::Index>(train_truth.size()));
    const Eigen::VectorXd ptr =
        Eigen::Map<const Eigen::VectorXd>(train_truth.data(), m) / interval;

    try {
      const Eigen::VectorXd beta = fit_ols(Xtr.topRows(m), ptr);
      Eigen::VectorXd est = (Xev * beta.tail(beta.size() - 1)).array() + beta(0);
      rep.rows.push_back({rate, "linear_truth", score(to_std(est * interval), truth)});
    } catch (const DegenerateFitError&) {
      rep.rows.push_back(unsupported(rate, "linear_truth"));
    }

    const RegressogramModel rg = fit_regressogram(Xtr.topRows(m), ptr, sc.constructor.regressogram_k);
    const Eigen::VectorXd est = predict_regressogram(rg, Xev) * interval;
    rep.rows.push_back({rate, "regressogram", score(to_std(est), truth)});
  }
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

std::filesystem::path write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ConfigError("cannot write '" + p.string() + "'");
  os << text;
  return p;
}

template <typename F>
std::filesystem::path write_with(const std::filesystem::path& p, F&& f) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ConfigError("cannot write '" + p.string() + "'");
  f(os);
  return p;
}

}  // namespace

std::vector<std::filesystem::path> run_scenario(const Scenario& sc, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  ModelTable table;
  table.threshold = sc.manager.threshold;
  table.window_s = sc.manager.window_s;
  const ConfigurationKey key(sc.manager.key);

  nlohmann::ordered_json meta;
  meta["scenario"] = sc.name;
  meta["experiment"] = to_string(sc.experiment);
  meta["seed"] = sc.seed;

  auto report_out = [&](const ErrorReport& rep) {
    written.push_back(write_with(out_dir / "report.csv", [&](std::ostream& os) { write_report_csv(os, rep); }));
  };

  switch (sc.experiment) {
    case ExperimentKind::ErrorVsRate:
      report_out(run_error_vs_rate(sc));
      break;
    case ExperimentKind::Molding: {
      MoldingResult res = run_molding(sc);
      report_out(res.report);
      meta["iterated_l"] = res.iterated.basis ? res.iterated.basis->l() : res.iterated.transformed_count();
      meta["iterated_below_target"] = res.iterated.below_target;
      meta["weighted_ids"] = res.iterated.weighted_ids;
      table.install(key, std::move(res.iterated));
      table.lookup_or_create(key);
      break;
    }
    case ExperimentKind::Adaptation: {
      std::ofstream log(out_dir / "decisions.log", std::ios::binary);
      if (!log) throw ConfigError("cannot write decision log");
      AdaptationResult res = run_adaptation(sc, &log);
      written.push_back(out_dir / "decisions.log");
      written.push_back(
          write_with(out_dir / "adaptation.csv", [&](std::ostream& os) { write_adaptation_csv(os, res); }));
      meta["rebuilds"] = res.rebuilds;
      meta["below_target"] = res.below_target;
      table = std::move(res.table);
      break;
    }
    case ExperimentKind::RegressogramCompare:
      report_out(run_regressogram_compare(sc));
      break;
  }
  persist(table, out_dir / "models.json");
  written.push_back(out_dir / "models.json");
  written.push_back(write_text(out_dir / "run.json", meta.dump(2) + "\n"));
  return written;
}

}  // namespace sesame
