#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace subnewton {

/// Bad caller input: dimension mismatch, out-of-range parameter, inconsistent config.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced a non-finite value or hit a numerically singular case.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Matrix has no usable leverage mass (all scores zero), so coherence or
/// leverage-proportional probabilities are undefined.
class DegenerateMatrixError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Cholesky factorization failed at a leading principal minor (1-based).
class NotPositiveDefiniteError : public NumericError {
 public:
  NotPositiveDefiniteError(std::size_t minor, double pivot)
      : NumericError("matrix is not positive definite: leading minor " + std::to_string(minor) +
                     " has pivot " + std::to_string(pivot)),
        minor_(minor),
        pivot_(pivot) {}

  std::size_t leading_minor() const noexcept { return minor_; }
  double pivot() const noexcept { return pivot_; }

 private:
  std::size_t minor_;
  double pivot_;
};

/// Malformed input file. Line and column are 1-based; column 0 means "whole line".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
      : std::runtime_error(format(what, line, column)), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t line, std::size_t column) {
    std::string out = "line " + std::to_string(line);
    if (column > 0) out += ", column " + std::to_string(column);
    return out + ": " + what;
  }

  std::size_t line_;
  std::size_t column_;
};

/// A file could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace subnewton
