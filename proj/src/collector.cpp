/*
 *  Copyright (C) 2026 The Sesame Toolkit Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#include "sesame/collector.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "sesame/csv.hpp"

namespace sesame {

std::size_t DesignMatrix::column(const std::string& id) const {
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw LookupError("design matrix has no column '" + id + "'");
  return static_cast<std::size_t>(it - ids.begin());
}

Eigen::VectorXd DesignMatrix::power() const {
  if (!y) throw ArgumentError("design matrix has no response column");
  return *y / interval_s;
}

DesignMatrix DesignMatrix::select(std::span<const std::string> keep) const {
  DesignMatrix out;
  out.interval_s = interval_s;
  out.t0_s = t0_s;
  out.y = y;
  out.X.resize(X.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    out.X.col(static_cast<Eigen::Index>(j)) = X.col(static_cast<Eigen::Index>(column(keep[j])));
    out.ids.push_back(keep[j]);
  }
  return out;
}

DesignMatrix merge_rows(const DesignMatrix& dm, std::size_t factor) {
  if (factor == 0) throw ArgumentError("merge factor must be positive");
  const auto k = static_cast<Eigen::Index>(factor);
  const Eigen::Index m = dm.X.rows() / k;
  DesignMatrix out;
  out.interval_s = dm.interval_s * static_cast<double>(factor);
  out.t0_s = dm.t0_s;
  out.ids = dm.ids;
  out.X.resize(m, dm.X.cols());
  for (Eigen::Index i = 0; i < m; ++i) out.X.row(i) = dm.X.middleRows(i * k, k).colwise().mean();
  if (dm.y) {
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) y(i) = dm.y->segment(i * k, k).sum();
    out.y = std::move(y);
  }
  return out;
}

// ---------------------------------------------------------------------------

Collector::Collector(const ObservedPredictors& observed, double target_rate_hz)
    : observed_(&observed),
      interval_s_(1.0 / target_rate_hz),
      width_(period_ticks(target_rate_hz, observed.tick_s, "target rate")) {}

double Collector::value(const PredictorStream& s, TickIndex begin, TickIndex end) const {
  const double tick = observed_->tick_s;
  if (s.ticks.empty()) return 0.0;

  if (s.policy == PollPolicy::EventDriven) {
    // Time-average of a piecewise-constant level.
    auto it = std::upper_bound(s.ticks.begin(), s.ticks.end(), begin);
    auto idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - s.ticks.begin()) - 1));
    double acc = 0.0;
    TickIndex cursor = begin;
    while (cursor < end) {
      const TickIndex next = idx + 1 < s.ticks.size() ? std::min(end, s.ticks[idx + 1]) : end;
      acc += s.values[idx] * static_cast<double>(next - cursor);
      cursor = next;
      ++idx;
    }
    return acc / static_cast<double>(end - begin);
  }

  // Cumulative counter sampled at s.ticks: rate between the newest samples at
  // or before each edge. With no fresh sample inside the interval the value
  // is held at the rate of the latest completed update period.
  auto last_at_or_before = [&](TickIndex t) -> std::ptrdiff_t {
    auto it = std::upper_bound(s.ticks.begin(), s.ticks.end(), t);
    return (it - s.ticks.begin()) - 1;
  };
  const std::ptrdiff_t sa = last_at_or_before(begin);
  const std::ptrdiff_t sb = last_at_or_before(end);
  auto rate = [&](std::ptrdiff_t lo, std::ptrdiff_t hi) {
    const auto l = static_cast<std::size_t>(lo);
    const auto h = static_cast<std::size_t>(hi);
    return (s.values[h] - s.values[l]) / (static_cast<double>(s.ticks[h] - s.ticks[l]) * tick);
  };
  if (sa >= 0 && sb > sa) return rate(sa, sb);
  if (sb >= 1) return rate(sb - 1, sb);
  // Before the first completed update: back-fill with the first period.
  if (s.ticks.size() >= 2) return rate(0, 1);
  return 0.0;
}

DesignMatrix Collector::collect(double duration_s, double start_s) const {
  const double tick = observed_->tick_s;
  const TickIndex start = ticks_for(start_s, tick, "collection start");
  const auto rows = static_cast<TickIndex>(std::floor(duration_s / interval_s_ + 1e-9));
  if (rows < 1) throw InsufficientDataError("collection span is shorter than one target interval");
  const TickIndex needed = start + rows * width_;
  if (needed > observed_->span_ticks) {
    const TickIndex missing = (needed - observed_->span_ticks + width_ - 1) / width_;
    throw TruncationError("predictor streams end " + std::to_string(missing) + " interval(s) before the requested span",
                          static_cast<std::size_t>(missing));
  }
  DesignMatrix dm;
  dm.interval_s = interval_s_;
  dm.t0_s = start_s;
  dm.ids = observed_->ids();
  dm.X.resize(rows, static_cast<Eigen::Index>(observed_->streams.size()));
  for (std::size_t j = 0; j < observed_->streams.size(); ++j) {
    const auto& s = observed_->streams[j];
    for (TickIndex r = 0; r < rows; ++r) {
      const TickIndex a = start + r * width_;
      dm.X(r, static_cast<Eigen::Index>(j)) = value(s, a, a + width_);
    }
  }
  return dm;
}

std::vector<double> Collector::bundle_read(std::span<const std::string> mask, double t_s) {
  if (mask.empty()) throw ArgumentError("bundle_read mask must not be empty");
  const TickIndex t = static_cast<TickIndex>(std::floor(t_s / observed_->tick_s + 1e-9));
  const TickIndex a = (t / width_) * width_;
  if (a + width_ > observed_->span_ticks || a < 0) throw ArgumentError("bundle_read time outside the streams");
  // Resolve every id before touching anything so an unknown id has no effect.
  std::vector<const PredictorStream*> picked;
  picked.reserve(mask.size());
  for (const auto& id : mask) picked.push_back(&observed_->stream(id));
  ++accesses_;
  std::vector<double> out;
  out.reserve(picked.size());
  for (const auto* s : picked) out.push_back(value(*s, a, a + width_));
  return out;
}

DesignMatrix collect(const ObservedPredictors& observed, double target_rate_hz, double duration_s, double start_s) {
  return Collector(observed, target_rate_hz).collect(duration_s, start_s);
}

// ---------------------------------------------------------------------------

Eigen::VectorXd aggregate_response(const ReadingStream& readings, double interval_s, double start_s,
                                   std::optional<double> span_s) {
  if (interval_s + 1e-12 < readings.period_s) {
    throw RateError("a " + std::to_string(interval_s) + " s response needs a faster interface than one reading per " +
                    std::to_string(readings.period_s) + " s");
  }
  const auto k = integral_ratio(interval_s, readings.period_s, "response interval / reading period");
  const auto first = integral_ratio(start_s + readings.period_s, readings.period_s, "response start") - 1;
  const bool capacity = readings.kind == InterfaceKind::Capacity;
  const auto n = static_cast<std::int64_t>(readings.readings.size());
  // Periods covered: capacity readings bound n - 1 periods, current readings n.
  const std::int64_t periods = capacity ? n - 1 : n;
  std::int64_t windows = (periods - first) / k;
  if (span_s) {
    const auto want = static_cast<std::int64_t>(std::floor(*span_s / interval_s + 1e-9));
    if (want > windows) throw ArgumentError("battery readings do not cover the requested span");
    windows = want;
  }
  windows = std::max<std::int64_t>(0, windows);

  Eigen::VectorXd y(windows);
  const double v = readings.voltage_v;
  for (std::int64_t w = 0; w < windows; ++w) {
    const std::int64_t p0 = first + w * k;  // first period index in window
    if (capacity) {
      const double drop = readings.readings[static_cast<std::size_t>(p0)].value -
                          readings.readings[static_cast<std::size_t>(p0 + k)].value;
      y(w) = drop * v;
    } else {
      double sum = 0.0;
      for (std::int64_t p = p0; p < p0 + k; ++p) sum += readings.readings[static_cast<std::size_t>(p)].value;
      y(w) = sum * v * readings.period_s;
    }
  }
  return y;
}

// ---------------------------------------------------------------------------

void write_design_csv(std::ostream& os, const DesignMatrix& dm) {
  os << "t_start_s";
  for (const auto& id : dm.ids) os << ',' << id;
  if (dm.y) os << ",y_j";
  os << '\n';
  for (Eigen::Index i = 0; i < dm.X.rows(); ++i) {
    os << format_double(dm.t_start(static_cast<std::size_t>(i)));
    for (Eigen::Index j = 0; j < dm.X.cols(); ++j) os << ',' << format_double(dm.X(i, j));
    if (dm.y) os << ',' << format_double((*dm.y)(i));
    os << '\n';
  }
}

DesignMatrix read_design_csv(std::istream& is) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(is, line)) throw ParseError("design matrix CSV is empty", 1, "header");
  auto header = split_csv_line(line);
  if (header.empty() || header.front() != "t_start_s") throw ParseError("first column must be t_start_s", 1, "header");
  const bool has_y = header.size() >= 2 && header.back() == "y_j";
  DesignMatrix dm;
  dm.ids.assign(header.begin() + 1, header.end() - (has_y ? 1 : 0));
  const std::size_t width = header.size();

  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != width) {
      throw ParseError("expected " + std::to_string(width) + " fields, found " + std::to_string(fields.size()), line_no,
                       "row");
    }
    std::vector<double> values;
    values.reserve(width);
    for (std::size_t j = 0; j < width; ++j) values.push_back(parse_double(fields[j], line_no, header[j]));
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ParseError("design matrix CSV has no rows", line_no, "row");
  dm.t0_s = rows.front()[0];
  dm.interval_s = rows.size() >= 2 ? rows[1][0] - rows[0][0] : 1.0;
  const auto m = static_cast<Eigen::Index>(rows.size());
  const auto n = static_cast<Eigen::Index>(dm.ids.size());
  dm.X.resize(m, n);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < n; ++j) dm.X(i, j) = r[static_cast<std::size_t>(j + 1)];
    if (has_y) y(i) = r.back();
  }
  if (has_y) dm.y = std::move(y);
  return dm;
}

}  // namespace sesame
