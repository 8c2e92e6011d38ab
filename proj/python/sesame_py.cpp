/*
 *  Copyright (C) 2026 The Sesame Toolkit Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sesame/battery_sim.hpp"
#include "sesame/collector.hpp"
#include "sesame/constructor.hpp"
#include "sesame/errors.hpp"
#include "sesame/experiments.hpp"
#include "sesame/manager.hpp"
#include "sesame/regressogram.hpp"
#include "sesame/scenario.hpp"
#include "sesame/trace_sim.hpp"

namespace py = pybind11;
using namespace sesame;

namespace {

py::array_t<double> as_array(std::span<const double> v) { return py::array_t<double>(v.size(), v.data()); }

py::array_t<std::uint8_t> states_array(const Trace& t, std::size_t c) {
  const auto s = t.states(c);
  return py::array_t<std::uint8_t>(s.size(), s.data());
}

DesignMatrix make_design(Eigen::MatrixXd X, std::vector<std::string> ids, double interval_s,
                         std::optional<Eigen::VectorXd> y, double t0_s) {
  if (static_cast<std::size_t>(X.cols()) != ids.size()) throw ArgumentError("one id per column is required");
  DesignMatrix dm;
  dm.X = std::move(X);
  dm.ids = std::move(ids);
  dm.interval_s = interval_s;
  dm.t0_s = t0_s;
  dm.y = std::move(y);
  return dm;
}

py::list report_rows(const ErrorReport& r) {
  py::list out;
  for (const auto& row : r.rows) {
    py::object err = row.rms ? py::object(py::float_(row.rms->rms)) : py::object(py::none());
    out.append(py::make_tuple(row.rate_hz, row.estimator, err));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_sesame, m) {
  m.doc() = "Energy model construction from coarse battery readings";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<AlignmentError>(m, "AlignmentError", base.ptr());
  py::register_exception<RateError>(m, "RateError", base.ptr());
  py::register_exception<InsufficientDataError>(m, "InsufficientDataError", base.ptr());
  py::register_exception<DegenerateFitError>(m, "DegenerateFitError", base.ptr());
  py::register_exception<SchemaError>(m, "SchemaError", base.ptr());
  py::register_exception<LookupError>(m, "LookupError", base.ptr());
  py::register_exception<ArgumentError>(m, "ArgumentError", base.ptr());
  py::register_exception<TruncationError>(m, "TruncationError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());

  // Scenarios and simulation -------------------------------------------------

  py::class_<Scenario>(m, "Scenario")
      .def_readwrite("name", &Scenario::name)
      .def_readonly("seed", &Scenario::seed)
      .def_readwrite("train_s", &Scenario::train_s)
      .def_readwrite("eval_s", &Scenario::eval_s)
      .def_readwrite("duration_s", &Scenario::duration_s)
      .def_readwrite("rate_grid", &Scenario::rate_grid)
      .def_readwrite("read_rate_hz", &Scenario::read_rate_hz)
      .def_property(
          "experiment", [](const Scenario& s) { return to_string(s.experiment); },
          [](Scenario& s, const std::string& k) { s.experiment = experiment_kind_from_string(k); })
      .def_property(
          "t_low_s", [](const Scenario& s) { return s.constructor.t_low_s; },
          [](Scenario& s, double v) { s.constructor.t_low_s = v; })
      .def_property(
          "l", [](const Scenario& s) { return s.constructor.l; },
          [](Scenario& s, std::size_t v) { s.constructor.l = v; })
      .def_property(
          "threshold", [](const Scenario& s) { return s.manager.threshold; },
          [](Scenario& s, double v) { s.manager.threshold = v; })
      .def_property_readonly("predictor_ids",
                             [](const Scenario& s) {
                               std::vector<std::string> ids;
                               for (const auto& p : s.predictors) ids.push_back(p.id);
                               return ids;
                             })
      .def("reseed", &Scenario::reseed, py::arg("seed"))
      .def("validate", &Scenario::validate);

  m.def("parse_scenario", &parse_scenario, py::arg("text"));
  m.def("load_scenario", &load_scenario, py::arg("path"));

  py::class_<Trace>(m, "Trace")
      .def_property_readonly("tick_s", &Trace::tick_s)
      .def_property_readonly("duration_s", &Trace::duration_s)
      .def("__len__", &Trace::size)
      .def_property_readonly("power", [](const Trace& t) { return as_array(t.power()); })
      .def("states", &states_array, py::arg("component"))
      .def("energy", [](const Trace& t, TickIndex a, TickIndex b) { return t.energy_j(a, b); });

  py::class_<ReadingStream>(m, "ReadingStream")
      .def_property_readonly("kind", [](const ReadingStream& r) { return to_string(r.kind); })
      .def_readonly("period_s", &ReadingStream::period_s)
      .def_readonly("voltage_v", &ReadingStream::voltage_v)
      .def_property_readonly("times",
                             [](const ReadingStream& r) {
                               std::vector<double> v;
                               for (const auto& x : r.readings) v.push_back(x.t_s);
                               return v;
                             })
      .def_property_readonly("values", [](const ReadingStream& r) {
        std::vector<double> v;
        for (const auto& x : r.readings) v.push_back(x.value);
        return v;
      });

  py::class_<ObservedPredictors>(m, "ObservedPredictors").def_property_readonly("ids", &ObservedPredictors::ids);

  py::class_<Simulation>(m, "Simulation")
      .def_readonly("trace", &Simulation::trace)
      .def_readonly("observed", &Simulation::observed)
      .def_readonly("readings", &Simulation::readings);

  m.def("simulate", &simulate, py::arg("scenario"), py::arg("duration_s"));
  m.def("true_energy", &true_energy_values, py::arg("trace"), py::arg("interval_s"), py::arg("start_s"),
        py::arg("span_s"));
  m.def(
      "true_predictor_values",
      [](const Scenario& sc, const Trace& trace, const std::string& id, double interval, double start, double span) {
        for (const auto& p : sc.predictors) {
          if (p.id == id) return true_predictor_values(trace, p, interval, start, span);
        }
        throw LookupError("unknown predictor '" + id + "'");
      },
      py::arg("scenario"), py::arg("trace"), py::arg("id"), py::arg("interval_s"), py::arg("start_s"),
      py::arg("span_s"));

  // Battery interface ----------------------------------------------------------

  m.def("average_to_rate", &average_to_rate, py::arg("readings"), py::arg("rate_hz"));
  m.def("held_interface_energy", &held_interface_energy, py::arg("readings"), py::arg("interval_s"),
        py::arg("start_s"), py::arg("span_s"));
  m.def(
      "rms_relative_error",
      [](const std::vector<double>& est, const std::vector<double>& truth) {
        const RmsResult r = rms_relative_error(est, truth);
        return py::make_tuple(r.rms, r.used, r.excluded);
      },
      py::arg("estimates"), py::arg("truth"));

  // Collection -------------------------------------------------------------------

  py::class_<DesignMatrix>(m, "DesignMatrix")
      .def(py::init(&make_design), py::arg("X"), py::arg("ids"), py::arg("interval_s"),
           py::arg("y") = std::nullopt, py::arg("t0_s") = 0.0)
      .def_readonly("interval_s", &DesignMatrix::interval_s)
      .def_readonly("t0_s", &DesignMatrix::t0_s)
      .def_readonly("ids", &DesignMatrix::ids)
      .def_readonly("X", &DesignMatrix::X)
      .def_readonly("y", &DesignMatrix::y)
      .def("rows", &DesignMatrix::rows)
      .def("cols", &DesignMatrix::cols);

  m.def("collect", &collect, py::arg("observed"), py::arg("rate_hz"), py::arg("duration_s"), py::arg("start_s") = 0.0);
  m.def("merge_rows", &merge_rows, py::arg("dm"), py::arg("factor"));
  m.def("aggregate_response", &aggregate_response, py::arg("readings"), py::arg("interval_s"),
        py::arg("start_s") = 0.0, py::arg("span_s") = std::nullopt);

  // Construction ---------------------------------------------------------------

  py::class_<PCABasis>(m, "PCABasis")
      .def_readonly("ids", &PCABasis::ids)
      .def_readonly("rows", &PCABasis::rows)
      .def_readonly("singular_values", &PCABasis::singular_values)
      .def_readonly("means", &PCABasis::means)
      .def_readonly("scales", &PCABasis::scales)
      .def_property_readonly("l", &PCABasis::l)
      .def("transform", &PCABasis::transform, py::arg("X"))
      .def("reconstruct", &PCABasis::reconstruct, py::arg("Z"));

  m.def(
      "pca_transform",
      [](const Eigen::MatrixXd& X, const std::vector<std::string>& ids, bool center, bool scale) {
        PcaResult r = pca_transform(X, ids, PcaOptions{center, scale});
        return py::make_tuple(r.basis, r.Z, r.dropped_ids);
      },
      py::arg("X"), py::arg("ids"), py::arg("center") = true, py::arg("scale") = true);
  m.def("select_components", &select_components, py::arg("basis"), py::arg("l"));
  m.def("fit_tls", &fit_tls, py::arg("X"), py::arg("y"));
  m.def("fit_ols", &fit_ols, py::arg("X"), py::arg("y"));

  py::class_<EnergyModel>(m, "EnergyModel")
      .def_readonly("predictor_ids", &EnergyModel::predictor_ids)
      .def_readonly("basis", &EnergyModel::basis)
      .def_readonly("beta", &EnergyModel::beta)
      .def_readonly("training_interval_s", &EnergyModel::training_interval_s)
      .def_readonly("training_error", &EnergyModel::training_error)
      .def_readonly("weighted_ids", &EnergyModel::weighted_ids)
      .def_readonly("below_target", &EnergyModel::below_target)
      .def_property_readonly("method", [](const EnergyModel& e) { return to_string(e.method); })
      .def("power", [](const EnergyModel& e, const std::vector<double>& x) { return e.power(x); })
      .def("to_json", &model_to_json)
      .def_static("from_json", &model_from_json, py::arg("text"))
      .def("__eq__", &EnergyModel::operator==);

  m.def(
      "stretch",
      [](const DesignMatrix& base, const ReadingStream& r, double t_low, double min_s, double max_s) {
        return stretch(base, r, t_low, StretchRange{min_s, max_s});
      },
      py::arg("base"), py::arg("readings"), py::arg("t_low_s"), py::arg("min_s") = StretchRange{}.min_s,
      py::arg("max_s") = StretchRange{}.max_s);
  m.def(
      "fit_model",
      [](const DesignMatrix& dm, const std::string& method, std::optional<std::size_t> components) {
        FitOptions o;
        o.method = fit_method_from_string(method);
        o.components = components;
        return fit_model(dm, o);
      },
      py::arg("stretched"), py::arg("method") = "TLS", py::arg("components") = std::nullopt);
  m.def(
      "iterate_construction",
      [](const DesignMatrix& dm, double target, const std::string& method) {
        FitOptions o;
        o.method = fit_method_from_string(method);
        return iterate_construction(dm, target, o);
      },
      py::arg("stretched"), py::arg("accuracy_target"), py::arg("method") = "TLS");
  m.def("predict_energy", &predict_energy, py::arg("model"), py::arg("dm"));
  m.def(
      "compress", [](const EnergyModel& e, const std::vector<double>& x, double t) { return compress(e, x, t); },
      py::arg("model"), py::arg("x"), py::arg("t_s"));

  py::class_<RegressogramModel>(m, "RegressogramModel")
      .def_readonly("bins", &RegressogramModel::bins)
      .def_readonly("fallback", &RegressogramModel::fallback)
      .def_property_readonly("populated_cells", [](const RegressogramModel& r) { return r.cells.size(); })
      .def("predict", [](const RegressogramModel& r, const Eigen::MatrixXd& X) { return predict_regressogram(r, X); });
  m.def("fit_regressogram", &fit_regressogram, py::arg("X"), py::arg("y"), py::arg("k") = 10);

  // Management -----------------------------------------------------------------

  py::class_<ModelTable>(m, "ModelTable")
      .def(py::init<>())
      .def_readwrite("threshold", &ModelTable::threshold)
      .def_readwrite("window_s", &ModelTable::window_s)
      .def("__len__", &ModelTable::size)
      .def(
          "install",
          [](ModelTable& t, const std::vector<std::tuple<std::string, std::string, std::string>>& key,
             const EnergyModel& m) {
            std::vector<ConfigEntry> e;
            for (const auto& [c, n, v] : key) e.push_back({c, n, v});
            t.install(ConfigurationKey(e), m);
          },
          py::arg("key"), py::arg("model"))
      .def(
          "find",
          [](const ModelTable& t, const std::vector<std::tuple<std::string, std::string, std::string>>& key)
              -> std::optional<EnergyModel> {
            std::vector<ConfigEntry> e;
            for (const auto& [c, n, v] : key) e.push_back({c, n, v});
            const EnergyModel* m = t.find(ConfigurationKey(e));
            if (m == nullptr) return std::nullopt;
            return *m;
          },
          py::arg("key"))
      .def("__eq__", &ModelTable::operator==);
  m.def("persist", &persist, py::arg("table"), py::arg("path"));
  m.def("load_table", &load, py::arg("path"));

  // Experiments ------------------------------------------------------------------

  m.def("run_error_vs_rate", [](const Scenario& sc) { return report_rows(run_error_vs_rate(sc)); }, py::arg("scenario"));
  m.def("run_molding", [](const Scenario& sc) { return report_rows(run_molding(sc).report); }, py::arg("scenario"));
  m.def("run_regressogram_compare", [](const Scenario& sc) { return report_rows(run_regressogram_compare(sc)); },
        py::arg("scenario"));
  m.def(
      "run_adaptation",
      [](const Scenario& sc) {
        const AdaptationResult r = run_adaptation(sc);
        py::list rows;
        for (const auto& w : r.windows) {
          py::object err = w.error ? py::object(py::float_(*w.error)) : py::object(py::none());
          rows.append(py::make_tuple(w.t_s, err, w.rebuild, w.action));
        }
        return py::make_tuple(rows, r.rebuilds);
      },
      py::arg("scenario"));
  m.def(
      "run_scenario",
      [](const Scenario& sc, const std::filesystem::path& out) {
        std::vector<std::string> files;
        for (const auto& p : run_scenario(sc, out)) files.push_back(p.string());
        return files;
      },
      py::arg("scenario"), py::arg("out_dir"));
}
