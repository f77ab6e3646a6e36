#pragma once

#include <stdexcept>
#include <string>

namespace szero {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid hyperparameters, shape mismatches, bad flags.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A NaN or Inf appeared in a computation.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Misuse of a single-use object (e.g. a consumed GradientTape).
class StateError : public Error {
public:
    using Error::Error;
};

/// Malformed model container, IDX file, CSV or report.
class ParseError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Internal consistency check failed (query counters, witnesses, dominance).
class IntegrityError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

}  // namespace szero
