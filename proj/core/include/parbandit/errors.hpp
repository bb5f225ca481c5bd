#pragma once

#include <stdexcept>
#include <string>

namespace parbandit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument violates a documented precondition (non-finite value, bad range).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be positive definite failed to factor.
class IllConditioned : public Error {
 public:
  using Error::Error;
};

/// The logistic solver could not make progress without increasing the objective.
class OptimizationFailure : public Error {
 public:
  using Error::Error;
};

/// Inconsistent or missing data (log entries, telemetry content).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. The message carries the source location.
class ParseError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace parbandit
