#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vplace {

/// Caller supplied a value that violates a documented precondition.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A malformed record in an input stream; `row` is 1-based and counts the
/// header line for CSV input.
class RowError : public InputError {
 public:
  RowError(std::size_t row, std::string reason)
      : InputError("row " + std::to_string(row) + ": " + reason),
        row_(row),
        reason_(std::move(reason)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t row_;
  std::string reason_;
};

/// Too few samples for an estimator.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A requested fit range does not contain enough scales.
class RangeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vplace
