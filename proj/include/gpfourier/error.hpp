#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gpfourier {

/// Invalid arguments or violated preconditions. The CLI maps these to exit code 2.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input content (non-numeric cells, missing columns, bad JSON).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sample times are not on a uniform grid.
class NonUniformSpacingError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

/// Base class of all numerical failures. The CLI maps these to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateInputError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, std::size_t iteration)
      : NumericalError(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

class ConditioningError : public NumericalError {
 public:
  ConditioningError(const std::string& what, double final_jitter)
      : NumericalError(what + " (final jitter " + std::to_string(final_jitter) + ")"),
        final_jitter_(final_jitter) {}

  double final_jitter() const noexcept { return final_jitter_; }

 private:
  double final_jitter_;
};

}  // namespace gpfourier
