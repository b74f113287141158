#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spiked {

// Invalid argument ranges, shape mismatches and other precondition failures.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A column with no observed entries reached an operation that needs
// per-feature statistics.
class DegenerateColumnError : public DomainError {
 public:
  explicit DegenerateColumnError(std::size_t column)
      : DomainError("column " + std::to_string(column) +
                    " has no observed entries"),
        column_(column) {}

  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

// Malformed text input (CSV, config files, model files).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values or failed factorizations during an iterative fit.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, long iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

}  // namespace spiked
