/*
 *  Copyright (C) 2026 The Sesame Toolkit Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#include "sesame/constructor.hpp"

#include <algorithm>
#include <cmath>

namespace sesame {

namespace {

constexpr double kTlsDegenerate = 1e-12;

bool is_constant(const Eigen::VectorXd& col) {
  if (col.size() < 2) return true;
  const double lo = col.minCoeff();
  const double hi = col.maxCoeff();
  return (hi - lo) <= 1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
}

double sample_sd(const Eigen::VectorXd& col, double mean) {
  if (col.size() < 2) return 0.0;
  return std::sqrt((col.array() - mean).square().sum() / static_cast<double>(col.size() - 1));
}

void canonicalize_signs(Eigen::MatrixXd& V) {
  for (Eigen::Index k = 0; k < V.cols(); ++k) {
    Eigen::Index arg = 0;
    V.col(k).cwiseAbs().maxCoeff(&arg);
    if (V(arg, k) < 0.0) V.col(k) *= -1.0;
  }
}

bool same_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

}  // namespace

std::string to_string(FitMethod m) { return m == FitMethod::TLS ? "TLS" : "OLS"; }

FitMethod fit_method_from_string(const std::string& s) {
  if (s == "TLS" || s == "tls") return FitMethod::TLS;
  if (s == "OLS" || s == "ols") return FitMethod::OLS;
  throw ConfigError("unknown fit method '" + s + "'");
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd PCABasis::transform(const Eigen::MatrixXd& X) const {
  if (static_cast<std::size_t>(X.cols()) != n()) throw SchemaError("predictor count does not match the PCA basis");
  Eigen::MatrixXd xs = (X.rowwise() - means.transpose()).array().rowwise() / scales.transpose().array();
  return xs * rows.transpose();
}

Eigen::MatrixXd PCABasis::reconstruct(const Eigen::MatrixXd& Z) const {
  if (static_cast<std::size_t>(Z.cols()) != l()) throw SchemaError("component count does not match the PCA basis");
  Eigen::MatrixXd xs = Z * rows;
  return (xs.array().rowwise() * scales.transpose().array()).rowwise() + means.transpose().array();
}

bool PCABasis::operator==(const PCABasis& o) const {
  return ids == o.ids && same_matrix(rows, o.rows) && same_matrix(singular_values, o.singular_values) &&
         same_matrix(means, o.means) && same_matrix(scales, o.scales);
}

PcaResult pca_transform(const Eigen::MatrixXd& X, std::span<const std::string> ids, const PcaOptions& opts) {
  if (static_cast<std::size_t>(X.cols()) != ids.size()) throw SchemaError("id count does not match predictor columns");
  if (X.cols() < 1) throw InsufficientDataError("PCA needs at least one predictor");
  if (X.rows() < X.cols()) {
    throw InsufficientDataError("PCA needs at least as many rows (" + std::to_string(X.rows()) + ") as predictors (" +
                                std::to_string(X.cols()) + ")");
  }
  PcaResult out;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (is_constant(X.col(j))) {
      out.dropped_ids.push_back(ids[static_cast<std::size_t>(j)]);
      out.warnings.push_back("predictor '" + ids[static_cast<std::size_t>(j)] +
                             "' has zero variance and was dropped before the SVD");
    } else {
      out.kept.push_back(static_cast<std::size_t>(j));
    }
  }
  if (out.kept.empty()) throw InsufficientDataError("every predictor has zero variance");

  const auto n = static_cast<Eigen::Index>(out.kept.size());
  Eigen::MatrixXd Xk(X.rows(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Xk.col(j) = X.col(static_cast<Eigen::Index>(out.kept[static_cast<std::size_t>(j)]));
    out.basis.ids.push_back(ids[out.kept[static_cast<std::size_t>(j)]]);
  }
  out.basis.means = opts.center ? Eigen::VectorXd(Xk.colwise().mean().transpose()) : Eigen::VectorXd::Zero(n);
  out.basis.scales = Eigen::VectorXd::Ones(n);
  if (opts.scale) {
    for (Eigen::Index j = 0; j < n; ++j) out.basis.scales(j) = sample_sd(Xk.col(j), out.basis.means(j));
  }
  Eigen::MatrixXd xs = (Xk.rowwise() - out.basis.means.transpose()).array().rowwise() /
                       out.basis.scales.transpose().array();

  // X^T = U S V*  <=>  X = V S U*: the right singular vectors of X are the
  // columns of U.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(xs, Eigen::ComputeThinV);
  Eigen::MatrixXd U = svd.matrixV();
  canonicalize_signs(U);
  out.basis.rows = U.transpose();
  out.basis.singular_values = svd.singularValues();
  out.Z = xs * U;
  return out;
}

PcaResult pca_transform(const DesignMatrix& dm, const PcaOptions& opts) { return pca_transform(dm.X, dm.ids, opts); }

PCABasis select_components(const PCABasis& basis, std::size_t l) {
  if (l < 1 || l > basis.l()) {
    throw ArgumentError("component count " + std::to_string(l) + " outside [1, " + std::to_string(basis.l()) + "]");
  }
  PCABasis out = basis;
  out.rows = basis.rows.topRows(static_cast<Eigen::Index>(l));
  return out;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd fit_tls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) throw SchemaError("X and y differ in row count");
  const Eigen::Index n = X.cols();
  if (X.rows() < n + 1) {
    throw InsufficientDataError("TLS needs at least " + std::to_string(n + 1) + " rows, got " +
                                std::to_string(X.rows()));
  }
  Eigen::MatrixXd A(X.rows(), n + 2);
  A.col(0).setOnes();
  A.middleCols(1, n) = X;
  A.col(n + 1) = y;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::VectorXd v = svd.matrixV().col(n + 1);
  const double last = v(n + 1);
  if (std::abs(last) < kTlsDegenerate) throw DegenerateFitError("TLS solution has a vanishing response weight");
  return -v.head(n + 1) / last;
}

Eigen::VectorXd fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) throw SchemaError("X and y differ in row count");
  const Eigen::Index n = X.cols();
  if (X.rows() < n + 1) {
    throw InsufficientDataError("OLS needs at least " + std::to_string(n + 1) + " rows, got " +
                                std::to_string(X.rows()));
  }
  Eigen::MatrixXd A(X.rows(), n + 1);
  A.col(0).setOnes();
  A.rightCols(n) = X;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-10);
  if (qr.rank() < n + 1) {
    throw DegenerateFitError("design matrix is rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                             std::to_string(n + 1) + ")");
  }
  return qr.solve(y);
}

// ---------------------------------------------------------------------------

double EnergyModel::power(std::span<const double> x) const {
  if (x.size() != predictor_ids.size()) {
    throw SchemaError("model expects " + std::to_string(predictor_ids.size()) + " predictors, got " +
                      std::to_string(x.size()));
  }
  double p = beta(0);
  if (basis) {
    const auto n = static_cast<Eigen::Index>(x.size());
    for (Eigen::Index k = 0; k < basis->rows.rows(); ++k) {
      double z = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        z += basis->rows(k, j) * (x[static_cast<std::size_t>(j)] - basis->means(j)) / basis->scales(j);
      }
      p += beta(k + 1) * z;
    }
  } else {
    for (std::size_t j = 0; j < x.size(); ++j) p += beta(static_cast<Eigen::Index>(j + 1)) * x[j];
  }
  return p;
}

bool EnergyModel::operator==(const EnergyModel& o) const {
  return predictor_ids == o.predictor_ids && basis == o.basis && same_matrix(beta, o.beta) &&
         training_interval_s == o.training_interval_s && method == o.method && training_error == o.training_error &&
         weighted_ids == o.weighted_ids && below_target == o.below_target;
}

double compress(const EnergyModel& model, std::span<const double> x, double t_s) {
  if (!(t_s > 0.0) || t_s > model.training_interval_s * (1.0 + 1e-9)) {
    throw ArgumentError("compression interval must lie in (0, " + std::to_string(model.training_interval_s) + "] s");
  }
  return model.power(x) * t_s;
}

Eigen::VectorXd predict_energy(const EnergyModel& model, const DesignMatrix& dm) {
  std::vector<Eigen::Index> cols;
  cols.reserve(model.predictor_ids.size());
  for (const auto& id : model.predictor_ids) {
    const auto it = std::find(dm.ids.begin(), dm.ids.end(), id);
    if (it == dm.ids.end()) throw SchemaError("design matrix lacks model predictor '" + id + "'");
    cols.push_back(static_cast<Eigen::Index>(it - dm.ids.begin()));
  }
  Eigen::MatrixXd X(dm.X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) X.col(static_cast<Eigen::Index>(j)) = dm.X.col(cols[j]);
  Eigen::VectorXd p = Eigen::VectorXd::Constant(X.rows(), model.beta(0));
  if (model.basis) {
    p += model.basis->transform(X) * model.beta.tail(model.beta.size() - 1);
  } else if (X.cols() > 0) {
    p += X * model.beta.tail(model.beta.size() - 1);
  }
  return p * dm.interval_s;
}

DesignMatrix stretch(const DesignMatrix& base, const ReadingStream& readings, double t_low_s,
                     const StretchRange& range) {
  if (t_low_s < range.min_s - 1e-9 || t_low_s > range.max_s + 1e-9) {
    throw ArgumentError("stretch interval " + std::to_string(t_low_s) + " s outside [" + std::to_string(range.min_s) +
                        ", " + std::to_string(range.max_s) + "] s");
  }
  const auto factor = integral_ratio(t_low_s, base.interval_s, "stretch interval / base interval");
  DesignMatrix out = merge_rows(base, static_cast<std::size_t>(factor));
  out.y = aggregate_response(readings, t_low_s, base.t0_s, static_cast<double>(out.rows()) * t_low_s);
  const std::size_t need = base.cols() + 2;
  if (out.rows() < need) {
    throw InsufficientDataError("stretching yields " + std::to_string(out.rows()) + " rows, need at least " +
                                std::to_string(need));
  }
  return out;
}

std::vector<std::string> varying_columns(const DesignMatrix& dm) {
  std::vector<std::string> out;
  for (Eigen::Index j = 0; j < dm.X.cols(); ++j) {
    if (!is_constant(dm.X.col(j))) out.push_back(dm.ids[static_cast<std::size_t>(j)]);
  }
  return out;
}

EnergyModel fit_model(const DesignMatrix& stretched, const FitOptions& opts, std::vector<std::string>* warnings) {
  if (!stretched.y) throw ArgumentError("fit needs a response column");
  const Eigen::VectorXd p = stretched.power();
  const auto m = static_cast<Eigen::Index>(stretched.rows());

  EnergyModel model;
  model.training_interval_s = stretched.interval_s;
  model.method = opts.method;

  const auto kept_ids = varying_columns(stretched);
  for (const auto& id : stretched.ids) {
    if (std::find(kept_ids.begin(), kept_ids.end(), id) == kept_ids.end() && warnings) {
      warnings->push_back("predictor '" + id + "' has zero variance; its effect moves to the intercept");
    }
  }
  const auto n = static_cast<Eigen::Index>(kept_ids.size());
  if (m < n + 2) {
    throw InsufficientDataError("fit needs at least " + std::to_string(n + 2) + " rows, got " + std::to_string(m));
  }
  model.predictor_ids = kept_ids;

  if (n == 0) {
    model.beta = Eigen::VectorXd::Constant(1, p.mean());
  } else {
    const DesignMatrix sub = stretched.select(kept_ids);
    PcaResult pca = pca_transform(sub.X, kept_ids);
    Eigen::MatrixXd Z;
    if (opts.components) {
      const std::size_t l = std::min<std::size_t>(*opts.components, static_cast<std::size_t>(n));
      pca.basis = select_components(pca.basis, l);
      Z = pca.Z.leftCols(static_cast<Eigen::Index>(l));
    } else {
      // Centered, scaled original predictors.
      Z = (sub.X.rowwise() - pca.basis.means.transpose()).array().rowwise() / pca.basis.scales.transpose().array();
    }

    Eigen::VectorXd coef;
    if (opts.method == FitMethod::TLS) {
      const double mp = p.mean();
      const double sp = sample_sd(p, mp);
      try {
        if (!(sp > 0.0)) throw DegenerateFitError("response has zero variance");
        const Eigen::VectorXd ps = (p.array() - mp) / sp;
        const Eigen::VectorXd b = fit_tls(Z, ps);
        coef.resize(b.size());
        coef(0) = mp + sp * b(0);
        coef.tail(b.size() - 1) = sp * b.tail(b.size() - 1);
      } catch (const DegenerateFitError& e) {
        if (warnings) warnings->push_back(std::string("TLS fell back to OLS: ") + e.what());
        model.method = FitMethod::OLS;
        coef = fit_ols(Z, p);
      }
    } else {
      coef = fit_ols(Z, p);
    }

    if (opts.components) {
      model.beta = coef;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (pca.basis.rows.col(j).norm() > opts.weight_threshold) {
          model.weighted_ids.push_back(kept_ids[static_cast<std::size_t>(j)]);
        }
      }
      model.basis = std::move(pca.basis);
    } else {
      // Fold the normalization back into plain coefficients on raw predictors.
      model.beta.resize(n + 1);
      model.beta(0) = coef(0);
      for (Eigen::Index j = 0; j < n; ++j) {
        model.beta(j + 1) = coef(j + 1) / pca.basis.scales(j);
        model.beta(0) -= model.beta(j + 1) * pca.basis.means(j);
      }
      model.weighted_ids = kept_ids;
    }
  }

  const Eigen::VectorXd fitted = predict_energy(model, stretched);
  model.training_error = rms_relative_error(std::span<const double>(fitted.data(), static_cast<std::size_t>(fitted.size())),
                                            std::span<const double>(stretched.y->data(), stretched.rows()))
                             .rms;
  return model;
}

EnergyModel iterate_construction(const DesignMatrix& stretched, double accuracy_target, FitOptions opts,
                                 std::vector<std::string>* warnings) {
  if (!(accuracy_target >= 0.0) || accuracy_target >= 1.0) throw ArgumentError("accuracy target must lie in [0, 1)");
  const std::size_t n = varying_columns(stretched).size();
  if (n == 0) return fit_model(stretched, opts, warnings);

  auto accuracy = [](const EnergyModel& m) { return std::max(0.0, 1.0 - m.training_error); };

  opts.components = n;
  EnergyModel best = fit_model(stretched, opts, warnings);
  if (accuracy(best) < accuracy_target) {
    best.below_target = true;
    return best;
  }
  for (std::size_t l = n - 1; l >= 1; --l) {
    opts.components = l;
    EnergyModel candidate = fit_model(stretched, opts, warnings);
    if (accuracy(candidate) < accuracy_target) break;
    best = std::move(candidate);
  }
  return best;
}

}  // namespace sesame
