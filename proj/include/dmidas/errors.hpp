#pragma once

#include <stdexcept>
#include <string>

namespace dmidas {

/// Root of every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A configuration value is out of range or inconsistent.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input data could not be read, parsed or validated.
class DataError : public Error {
public:
    using Error::Error;
};

/// Optimization failed (non-finite loss or gradient, failed ensemble member).
class TrainingError : public Error {
public:
    using Error::Error;
};

/// An operation produced NaN or Inf.
class NumericError : public TrainingError {
public:
    using TrainingError::TrainingError;
};

}  // namespace dmidas
