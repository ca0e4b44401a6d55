#pragma once

#include <stdexcept>
#include <string>

namespace maskfdia {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Caller violated a precondition (bad argument, wrong formulation, empty mask, ...).
class UsageError : public Error {
public:
    using Error::Error;
};

/// Non-finite value encountered in a numeric path.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Malformed or unreadable input data. Messages name the offending row/column.
class IngestionError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration: the message starts with the offending field path.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Checkpoint could not be read back.
class CheckpointError : public Error {
public:
    using Error::Error;
};

class CalibrationError : public Error {
public:
    using Error::Error;
};

/// A metric is undefined for the given input (e.g. single-class ROC).
class MetricError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace maskfdia
