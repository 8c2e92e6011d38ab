/*
 *  Copyright (C) 2026 The Sesame Toolkit Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sesame {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid scenario, model or interface configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A time quantity that is not an integral multiple of the grid it must sit on.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// Requested response rate exceeds what the battery interface can deliver.
class RateError : public Error {
 public:
  using Error::Error;
};

/// Too few rows or samples to carry out a fit.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// The fit problem has no unique or finite solution.
class DegenerateFitError : public Error {
 public:
  using Error::Error;
};

/// Predictor ids or order do not match what a model expects.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Unknown predictor id or table entry.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Out-of-range argument to an operation.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A predictor stream ends before the requested collection span.
class TruncationError : public Error {
 public:
  TruncationError(const std::string& what, std::size_t missing)
      : Error(what), missing_(missing) {}
  /// Number of target intervals that could not be filled.
  std::size_t missing() const noexcept { return missing_; }

 private:
  std::size_t missing_;
};

/// Malformed persisted document. Carries the line and field where parsing stopped.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::string field)
      : Error(what), line_(line), field_(std::move(field)) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

}  // namespace sesame
