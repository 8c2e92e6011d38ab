/*
 *  Copyright (C) 2026 The Sesame Toolkit Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "sesame/battery_sim.hpp"
#include "sesame/collector.hpp"
#include "sesame/constructor.hpp"
#include "sesame/experiments.hpp"
#include "sesame/manager.hpp"
#include "sesame/regressogram.hpp"
#include "sesame/scenario.hpp"

using namespace sesame;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [" << what << "]";
    }
  }
};

Eigen::MatrixXd gaussian(Eigen::Index m, Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd X(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) X(i, j) = g(rng);
  }
  return X;
}

Scenario scenario(const std::string& name) { return load_scenario(fixture::scenario(name)); }

double error_at(const ErrorReport& rep, double rate, const std::string& estimator) {
  const ErrorRow* r = rep.find(rate, estimator);
  if (r == nullptr || !r->rms) return std::nan("");
  return r->rms->rms;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------

void interval_invariance(Check& c) {
  const auto start = std::chrono::steady_clock::now();
  const Scenario sc = scenario("linear_noiseless");
  const Simulation sim = simulate(sc, sc.train_s + sc.eval_s);
  const DesignMatrix base = collect(sim.observed, sc.read_rate_hz, sc.train_s, 0.0);
  const DesignMatrix stretched = stretch(base, sim.readings, 100.0, sc.constructor.stretch_range);

  FitOptions plain;
  FitOptions all = plain;
  all.components = stretched.cols();
  const EnergyModel models[] = {fit_model(stretched, plain), fit_model(stretched, all)};

  const Eigen::Vector4d truth_beta(2.0, 3.0, 1.2, 1.5);
  c.require((models[0].beta - truth_beta).cwiseAbs().maxCoeff() < 1e-6, "coefficients");

  for (double t : {0.01, 0.1, 1.0, 10.0}) {
    const DesignMatrix dm = collect(sim.observed, 1.0 / t, sc.eval_s, sc.train_s);
    const auto truth = true_energy_values(sim.trace, t, sc.train_s, sc.eval_s);
    for (const auto& m : models) {
      const Eigen::VectorXd est = predict_energy(m, dm);
      const std::vector<double> e(est.data(), est.data() + est.size());
      const double worst = oracle::max_relative_error(e, truth);
      c.detail << " t=" << t << ":" << worst;
      c.require(worst < 1e-6, "relative error at t=" + std::to_string(t));
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.detail << " runtime=" << secs << "s";
  c.require(secs < 10.0, "runtime");
}

void tls_vs_ols(Check& c) {
  const Eigen::MatrixXd X = gaussian(50, 3, 17);
  const Eigen::Vector4d beta(0.5, 1.5, -2.0, 3.0);
  const Eigen::VectorXd y = oracle::affine(X, beta);
  c.require((fit_tls(X, y) - beta).cwiseAbs().maxCoeff() < 1e-9, "tls exact");
  c.require((fit_ols(X, y) - beta).cwiseAbs().maxCoeff() < 1e-9, "ols exact");

  double tls = 0.0, ols = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Eigen::MatrixXd clean = gaussian(200, 3, 7000 + seed);
    const Eigen::VectorXd yy = oracle::affine(clean, beta);
    const Eigen::MatrixXd noisy = clean + 0.3 * gaussian(200, 3, 9000 + seed);
    tls += (fit_tls(noisy, yy) - beta).norm() / 100.0;
    ols += (fit_ols(noisy, yy) - beta).norm() / 100.0;
  }
  c.detail << " mean_tls=" << tls << " mean_ols=" << ols;
  c.require(tls < ols, "noisy ordering");
}

void pca_lossless(Check& c) {
  const Eigen::MatrixXd X = gaussian(300, 4, 31) * gaussian(4, 4, 32);
  Eigen::VectorXd y = oracle::affine(X, Eigen::Vector<double, 5>(1.0, 0.5, -1.0, 2.0, 0.3));
  y += 0.2 * gaussian(300, 1, 33);
  const std::vector<std::string> ids{"a", "b", "c", "d"};
  const PcaResult r = pca_transform(X, ids);
  const Eigen::VectorXd rx = y - oracle::affine(X, oracle::normal_equations(X, y));
  const Eigen::VectorXd rz = y - oracle::affine(r.Z, fit_ols(r.Z, y));
  c.detail << " rms_x=" << oracle::rms(rx) << " rms_z=" << oracle::rms(rz);
  c.require(std::abs(oracle::rms(rx) - oracle::rms(rz)) < 1e-9, "residual rms");
  const auto& U = r.basis.rows;
  c.require((U * U.transpose() - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-9, "orthonormal");
  c.require((r.basis.reconstruct(r.Z) - X).cwiseAbs().maxCoeff() < 1e-9, "reconstruction");
}

void regressogram_exact(Check& c) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  Eigen::MatrixXd X(1000, 2);
  Eigen::VectorXd y(1000);
  for (Eigen::Index i = 0; i < 1000; ++i) {
    X(i, 0) = u(rng);
    X(i, 1) = u(rng);
    y(i) = std::sin(X(i, 0)) + X(i, 1) * X(i, 1) + 0.1 * u(rng);
  }
  const RegressogramModel m = fit_regressogram(X, y, 10);
  const auto expected = oracle::brute_force_cell_means(X, y, 10);
  const Eigen::VectorXd p = predict_regressogram(m, X);
  std::size_t mismatches = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) mismatches += p(i) != expected[static_cast<std::size_t>(i)];
  c.detail << " mismatches=" << mismatches;
  c.require(mismatches == 0, "cell means");
}

bool non_increasing_toward_low_rates(const ErrorReport& rep) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : rep.rows) {
    if (r.estimator == "interface" && r.rms) pts.emplace_back(r.rate_hz, r.rms->rms);
  }
  std::sort(pts.begin(), pts.end());
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i - 1].second > pts[i].second) return false;
  }
  return !pts.empty() && pts.front().first <= 0.01 + 1e-12;
}

void raw_interface_error(Check& c) {
  const ErrorReport t61 = run_error_vs_rate(scenario("t61like"));
  const double e05 = error_at(t61, 0.5, "interface");
  c.detail << " t61@0.5Hz=" << e05;
  c.require(std::abs(e05 - 0.19) <= 0.03, "t61 at 0.5 Hz");
  c.require(non_increasing_toward_low_rates(t61), "t61 monotone");

  const ErrorReport n85 = run_error_vs_rate(scenario("n85like"));
  const double e4 = error_at(n85, 4.0, "interface");
  const double e1 = error_at(n85, 1.0, "interface");
  c.detail << " n85@4Hz=" << e4 << " n85@1Hz=" << e1;
  c.require(std::abs(e4 - 0.33) <= 0.03, "n85 at 4 Hz");
  c.require(e1 <= 0.13, "n85 at 1 Hz");
  c.require(non_increasing_toward_low_rates(n85), "n85 monotone");
}

void molding_order(Check& c, const MoldingResult& res, const std::vector<double>& grid) {
  for (double rate : grid) {
    const double iface = error_at(res.report, rate, "interface");
    const double l2 = error_at(res.report, rate, "molded_l2");
    const double l1 = error_at(res.report, rate, "molded_l1");
    const double all = error_at(res.report, rate, "molded_all_pcs");
    const double none = error_at(res.report, rate, "molded_no_pca");
    c.detail << " " << rate << "Hz:l2=" << l2 << ",all=" << all;
    const std::string at = " at " + std::to_string(rate);
    if (!std::isnan(iface)) c.require(l2 <= iface, "l2 vs interface" + at);
    c.require(all <= none * (1.0 + 1e-9), "all-pcs vs no-pca" + at);
    c.require(l2 <= 1.2 * all, "l2 vs all-pcs" + at);
    c.require(l1 > l2, "l1 vs l2" + at);
  }
}

void accuracy_anchors(Check& c, const MoldingResult& t61, const Scenario& n900sc) {
  const MoldingResult n900 = run_molding(n900sc);
  const std::string t61_est = "molded_l" + std::to_string(scenario("t61like").constructor.l);
  const std::string n900_est = "molded_l" + std::to_string(n900sc.constructor.l);
  const double a1 = 1.0 - error_at(t61.report, 1.0, t61_est);
  const double a100 = 1.0 - error_at(t61.report, 100.0, t61_est);
  const double b1 = 1.0 - error_at(n900.report, 1.0, n900_est);
  const double b100 = 1.0 - error_at(n900.report, 100.0, n900_est);
  c.detail << " t61=" << a1 << "/" << a100 << " n900=" << b1 << "/" << b100;
  c.require(a1 >= 0.93, "t61 at 1 Hz");
  c.require(a100 >= 0.85, "t61 at 100 Hz");
  c.require(b1 >= 0.83, "n900 at 1 Hz");
  c.require(b100 >= 0.79, "n900 at 100 Hz");
}

void adaptation_contract(Check& c, const std::string& name) {
  const Scenario sc = scenario(name);
  const AdaptationResult res = run_adaptation(sc);
  const double change_at = sc.change ? sc.change->at_s : 0.0;
  double worst_after = 0.0;
  std::size_t trigger = res.windows.size();
  for (std::size_t i = 0; i < res.windows.size(); ++i) {
    const auto& w = res.windows[i];
    if (w.t_s >= change_at && w.error) worst_after = std::max(worst_after, *w.error);
    if (w.rebuild && trigger == res.windows.size()) trigger = i;
  }
  // First index from which every monitored window stays under the threshold.
  std::size_t settled = res.windows.size();
  for (std::size_t i = res.windows.size(); i-- > 0;) {
    const auto& w = res.windows[i];
    if (w.error && *w.error >= sc.manager.threshold) break;
    settled = i;
  }
  c.detail << " " << name << ": worst_after=" << worst_after << " rebuilds=" << res.rebuilds;
  c.require(worst_after > sc.manager.threshold, name + " error rises");
  c.require(res.rebuilds == 1, name + " one rebuild");
  c.require(trigger < res.windows.size() && settled <= trigger + 10, name + " settles");
}

void adaptation(Check& c) {
  adaptation_contract(c, "dvs_flip");
  adaptation_contract(c, "workload_switch");
  const AdaptationResult control = run_adaptation(scenario("adaptation_control"));
  c.detail << " control rebuilds=" << control.rebuilds;
  c.require(control.rebuilds == 0, "control");
}

void nonlinear(Check& c) {
  const ErrorReport rep = run_regressogram_compare(scenario("quadratic"));
  const double rg = error_at(rep, 100.0, "regressogram");
  const double lin = error_at(rep, 100.0, "linear_molded");
  c.detail << " regressogram=" << rg << " linear=" << lin;
  c.require(rg < lin, "regressogram beats linear");
}

void reproducibility(Check& c) {
  const auto root = std::filesystem::temp_directory_path() / "sesame_acceptance";
  std::filesystem::remove_all(root);
  for (const std::string name : {"quadratic", "n85like", "dvs_flip"}) {
    const Scenario sc = scenario(name);
    const auto first = run_scenario(sc, root / name / "a");
    run_scenario(sc, root / name / "b");
    for (const auto& p : first) {
      c.require(slurp(p) == slurp(root / name / "b" / p.filename()), name + "/" + p.filename().string());
    }
    const ModelTable table = load(root / name / "a" / "models.json");
    persist(table, root / name / "again.json");
    c.require(load(root / name / "again.json") == table, name + " table round trip");
    c.require(slurp(root / name / "again.json") == slurp(root / name / "a" / "models.json"), name + " table bytes");
  }
  std::filesystem::remove_all(root);
}

}  // namespace

int main() {
  int failures = 0;
  auto run = [&](int id, const std::string& title, const std::function<void(Check&)>& body) {
    Check c;
    try {
      body(c);
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail << " exception: " << e.what();
    }
    std::cout << (c.ok ? "[PASS] " : "[FAIL] ") << id << " " << title << " |" << c.detail.str() << std::endl;
    failures += c.ok ? 0 : 1;
  };

  run(1, "interval invariance on noiseless linear data", interval_invariance);
  run(2, "total least squares", tls_vs_ols);
  run(3, "lossless full-rank transformation", pca_lossless);
  run(4, "regressogram cell means", regressogram_exact);
  run(5, "raw interface error versus rate", raw_interface_error);

  const Scenario t61sc = scenario("t61like");
  MoldingResult t61;
  run(6, "molding on the laptop-like scenario", [&](Check& c) {
    t61 = run_molding(t61sc);
    molding_order(c, t61, t61sc.rate_grid);
  });
  run(7, "accuracy anchors", [&](Check& c) { accuracy_anchors(c, t61, scenario("n900like")); });
  run(8, "adaptation", adaptation);
  run(9, "non-linear scenario", nonlinear);
  run(10, "reproducibility and persistence", reproducibility);

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
