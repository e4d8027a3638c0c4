#pragma once

#include <stdexcept>
#include <string>

namespace sdmae {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A configuration value violates an invariant or a required input is missing.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// A value could not be parsed; the message names the offending key.
class ParseError : public ConfigError {
public:
  using ConfigError::ConfigError;
};

/// Array dimensions disagree.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// Dataset or event-bank content is malformed.
class DataError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

/// Training diverged or was started from an invalid state.
class TrainingError : public Error {
public:
  using Error::Error;
};

}  // namespace sdmae
