/*
 *  Copyright (C) 2026 The Sesame Toolkit Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "sesame/errors.hpp"

namespace sesame {

/// Tick index on the simulation grid. Every timestamp in the toolkit is
/// relative to trace start and lands on this grid.
using TickIndex = std::int64_t;

/// Number of ticks in `seconds`; throws AlignmentError unless the value is an
/// integral multiple of `tick_s` (relative tolerance 1e-9).
inline TickIndex ticks_for(double seconds, double tick_s, const char* what = "interval") {
  if (!(tick_s > 0.0)) throw ConfigError("tick must be positive");
  const double ratio = seconds / tick_s;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, std::abs(ratio))) {
    throw AlignmentError(std::string(what) + " of " + std::to_string(seconds) +
                         " s is not a multiple of the " + std::to_string(tick_s) + " s tick");
  }
  return static_cast<TickIndex>(rounded);
}

/// Period of `rate_hz` expressed in ticks.
inline TickIndex period_ticks(double rate_hz, double tick_s, const char* what = "rate") {
  if (!(rate_hz > 0.0)) throw ConfigError(std::string(what) + " must be positive");
  return ticks_for(1.0 / rate_hz, tick_s, what);
}

/// Integral ratio `coarse / fine`; throws AlignmentError otherwise.
inline std::int64_t integral_ratio(double coarse, double fine, const char* what = "ratio") {
  const double ratio = coarse / fine;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw AlignmentError(std::string(what) + ": " + std::to_string(coarse) + " / " +
                         std::to_string(fine) + " is not a positive integer");
  }
  return static_cast<std::int64_t>(rounded);
}

}  // namespace sesame
