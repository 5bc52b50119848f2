#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cogmask {

/// Malformed or out-of-domain caller input (dimension mismatch, nonpositive probe, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A documented precondition of an operation does not hold for otherwise valid input,
/// e.g. asking for the margin of a dataset that fails the rationality test.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Structured parse failure for CSV/JSON files. Row and column are 1-based; 0 means "not applicable".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t row, std::size_t column)
      : std::runtime_error(format(message, row, column)), row_(row), column_(column) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& message, std::size_t row, std::size_t column) {
    std::string out;
    if (row > 0) out += "row " + std::to_string(row);
    if (column > 0) out += (out.empty() ? "" : ", ") + std::string("column ") + std::to_string(column);
    return out.empty() ? message : out + ": " + message;
  }

  std::size_t row_;
  std::size_t column_;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cogmask
