#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ntklab {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or malformed input (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Parse failure with the byte offset of the first offending character.
class ParseError : public ConfigError {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : ConfigError(what + " (byte " + std::to_string(offset) + ")"), offset(offset) {}
  std::size_t offset;
};

/// Non-finite values or failed numeric contracts (CLI exit code 3).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Gradient descent produced a non-finite loss at `step`.
class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, int step)
      : NumericError(what + " at step " + std::to_string(step)), step(step) {}
  int step;
};

/// Validation evaluator failed mid-search (CLI exit code 4).
class EvaluatorError : public Error {
 public:
  using Error::Error;
};

}  // namespace ntklab
