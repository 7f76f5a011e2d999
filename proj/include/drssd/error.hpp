#pragma once

#include <stdexcept>
#include <string>

namespace drssd {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed ConicProgram (dimension mismatch, non-finite data).
class ProgramError : public Error {
 public:
  using Error::Error;
};

/// Structural problems with an instance (sizes that do not line up).
class InstanceError : public Error {
 public:
  using Error::Error;
};

/// A solve did not produce a usable answer.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Bad or missing configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Data file parse failure with location.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int row, int column)
      : Error(what), row_(row), column_(column) {}
  int row() const { return row_; }
  int column() const { return column_; }

 private:
  int row_;
  int column_;
};

}  // namespace drssd
