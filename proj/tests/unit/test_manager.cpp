/*
 *  Copyright (C) 2026 The Sesame Toolkit Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sesame/battery_sim.hpp"
#include "sesame/collector.hpp"
#include "sesame/errors.hpp"
#include "sesame/manager.hpp"

using namespace sesame;

namespace {

ConfigurationKey t61(const std::string& dvs = "off") {
  return ConfigurationKey({{"hardware", "device", "t61"}, {"software", "dvs", dvs}, {"interaction", "brightness", "3"}});
}

/// Power = 2 + 3 * x0 + 1 * x1, no basis.
EnergyModel simple_model(double intercept = 2.0) {
  EnergyModel m;
  m.predictor_ids = {"x0", "x1"};
  m.beta = Eigen::Vector3d(intercept, 3.0, 1.0);
  m.training_interval_s = 100.0;
  m.training_error = 0.01;
  m.weighted_ids = m.predictor_ids;
  return m;
}

EnergyModel pca_model() {
  EnergyModel m = simple_model();
  PCABasis b;
  b.ids = m.predictor_ids;
  b.rows = Eigen::Matrix2d::Identity();
  b.rows(0, 1) = 0.1;
  b.singular_values = Eigen::Vector2d(3.0, 1.0 / 3.0);
  b.means = Eigen::Vector2d(0.1, 1.0 / 7.0);
  b.scales = Eigen::Vector2d(2.0, 0.3);
  m.basis = b;
  m.method = FitMethod::OLS;
  m.below_target = true;
  return m;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("sesame_test_" + name);
}

}  // namespace

TEST_CASE("configuration keys are canonical") {
  const ConfigurationKey a({{"software", "dvs", "off"}, {"hardware", "device", "t61"}});
  const ConfigurationKey b({{"hardware", "device", "t61"}, {"software", "dvs", "off"}});
  CHECK(a == b);
  CHECK(ConfigurationKeyHash{}(a) == ConfigurationKeyHash{}(b));
  CHECK(a.to_string() == b.to_string());
  CHECK(a.with("software", "dvs", "on") != a);
  CHECK(a.with("software", "dvs", "on").entries().size() == 2);
  CHECK(a.with("interaction", "brightness", "2").entries().size() == 3);
}

TEST_CASE("lookup after install returns the same model") {
  ModelTable t;
  CHECK(t.lookup_or_create(t61()) == nullptr);
  CHECK(t.active_key() == t61());
  t.install(t61(), simple_model());
  const EnergyModel* m = t.lookup_or_create(t61());
  REQUIRE(m != nullptr);
  CHECK(*m == simple_model());
  CHECK(t.active_model() == m);
}

TEST_CASE("flipping a software setting is a cold start") {
  ModelTable t;
  t.install(t61(), simple_model());
  CHECK(t.lookup_or_create(t61("on")) == nullptr);
  CHECK(t.active_model() == nullptr);
  CHECK(t.lookup_or_create(t61()) != nullptr);
}

TEST_CASE("install replaces only its own key") {
  ModelTable t;
  t.install(t61(), simple_model(1.0));
  t.install(t61("on"), simple_model(2.0));
  t.install(t61("on"), simple_model(3.0));
  CHECK(t.size() == 2);
  CHECK(t.find(t61())->beta(0) == 1.0);
  CHECK(t.find(t61("on"))->beta(0) == 3.0);
}

TEST_CASE("window error arithmetic") {
  CHECK(*window_error(110.0, 100.0) == doctest::Approx(0.10));
  CHECK(*window_error(100.0, 100.0) == 0.0);
  CHECK_FALSE(window_error(10.0, 0.0).has_value());
  CHECK_FALSE(window_error(10.0, -1.0).has_value());
}

TEST_CASE("monitor compares the model against the interface window by window") {
  ModelTable t;
  t.window_s = 100.0;
  t.install(t61(), simple_model());
  t.lookup_or_create(t61());
  DesignMatrix w;
  w.interval_s = 100.0;
  w.ids = {"x0", "x1"};
  w.X.resize(3, 2);
  w.X << 0.5, 1.0, 0.0, 0.0, 1.0, 2.0;
  // Interface readings at 1 Hz, 5 V: windows report 450 J, 200 J and 0 J.
  ReadingStream r{InterfaceKind::Instant, 1.0, 5.0, {}};
  for (int i = 1; i <= 300; ++i) {
    const double watts = i <= 100 ? 4.5 : (i <= 200 ? 2.0 : 0.0);
    r.readings.push_back({static_cast<double>(i), watts / 5.0});
  }
  const MonitorResult res = monitor(t, w, r);
  REQUIRE(res.windows.size() == 3);
  CHECK(res.windows[0].error == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(res.windows[1].error == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(res.windows[2].skipped);
  CHECK(res.skipped == 1);
  CHECK(t.history().size() == 3);
  CHECK(res.windows[1].t_s == 100.0);

  t.install(t61(), simple_model(2.0 + 0.45));
  t.lookup_or_create(t61());
  const MonitorResult off = monitor(t, w, r);
  CHECK(off.windows[0].error == doctest::Approx(0.10));
}

TEST_CASE("monitor needs an active model and matching windows") {
  ModelTable t;
  DesignMatrix w;
  w.interval_s = 100.0;
  w.ids = {"x0", "x1"};
  w.X = Eigen::MatrixXd::Zero(1, 2);
  const ReadingStream r{InterfaceKind::Instant, 1.0, 5.0, {}};
  CHECK_THROWS_AS(monitor(t, w, r), ArgumentError);
  t.install(t61(), simple_model());
  t.lookup_or_create(t61());
  w.interval_s = 50.0;
  CHECK_THROWS_AS(monitor(t, w, r), AlignmentError);
}

TEST_CASE("rebuild fires strictly above the threshold") {
  ModelTable t;
  t.threshold = 0.10;
  t.install(t61(), simple_model());
  t.lookup_or_create(t61());
  int calls = 0;
  DesignMatrix fresh;
  fresh.interval_s = 100.0;
  fresh.ids = {"x0", "x1"};
  fresh.X = Eigen::MatrixXd::Random(12, 2).array().abs();
  fresh.y = ((fresh.X * Eigen::Vector2d(4.0, 0.5)).array() + 1.0).matrix() * 100.0;
  auto source = [&] {
    ++calls;
    return fresh;
  };
  CHECK_FALSE(maybe_rebuild(t, 0.09, source, 0.9).rebuilt);
  CHECK_FALSE(maybe_rebuild(t, 0.10, source, 0.9).rebuilt);
  CHECK(calls == 0);
  const RebuildDecision d = maybe_rebuild(t, 0.17, source, 0.9);
  CHECK(d.rebuilt);
  CHECK(calls == 1);
  CHECK(t.active_model()->power(std::vector<double>{1.0, 1.0}) == doctest::Approx(5.5));
}

TEST_CASE("decision log lines") {
  std::ostringstream os;
  DecisionLog log(os);
  log.append(100.0, 0.125, 0.1, "monitor");
  log.append(200.0, std::nullopt, 0.1, "wait");
  CHECK(os.str() == "t_s,window_error,threshold,action\n100,0.125,0.1,monitor\n200,,0.1,wait\n");
}

TEST_CASE("empty table round-trips") {
  const ModelTable t;
  const auto path = temp_file("empty.json");
  persist(t, path);
  const ModelTable back = load(path);
  CHECK(back == t);
  CHECK(back.size() == 0);
  std::filesystem::remove(path);
}

TEST_CASE("three-model table round-trips field for field") {
  ModelTable t;
  t.threshold = 0.125;
  t.window_s = 60.0;
  t.install(t61(), simple_model());
  t.install(t61("on"), pca_model());
  t.install(ConfigurationKey({{"hardware", "device", "n900"}}), simple_model(1.0 / 3.0));
  t.lookup_or_create(t61("on"));
  t.record({0.0, 0.05, false});
  t.record({60.0, 0.0, true});
  const auto path = temp_file("three.json");
  persist(t, path);
  const ModelTable back = load(path);
  CHECK(back == t);
  CHECK(back.size() == 3);
  CHECK(*back.find(t61("on")) == pca_model());
  CHECK(back.active_key() == t61("on"));
  CHECK(back.history().size() == 2);
  std::filesystem::remove(path);
}

TEST_CASE("truncated table file is a parse error") {
  ModelTable t;
  t.install(t61(), pca_model());
  const std::string text = table_to_json(t);
  CHECK_THROWS_AS(table_from_json(text.substr(0, text.size() / 2)), ParseError);
  const auto path = temp_file("truncated.json");
  {
    std::ofstream os(path);
    os << text.substr(0, text.size() - 5);
  }
  CHECK_THROWS_AS(load(path), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("wrong field types report the field") {
  auto doc = nlohmann::json::parse(model_to_json(simple_model()));
  doc["training_interval_s"] = "long";
  try {
    model_from_json(doc.dump());
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.field().find("training_interval_s") != std::string::npos);
  }
}

TEST_CASE("history is bounded") {
  ModelTable t;
  t.history_capacity = 3;
  for (int i = 0; i < 5; ++i) t.record({static_cast<double>(i), 0.0, false});
  CHECK(t.history().size() == 3);
  CHECK(t.history().front().t_s == 2.0);
}
