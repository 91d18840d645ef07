#pragma once

#include <stdexcept>
#include <string>

namespace acsum {

/// Base for every error raised by the library. The CLI maps subclasses to
/// process exit codes (usage 1, data 2, numeric divergence 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A NaN or Inf appeared in a forward or backward value.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, int line, int column)
      : DataError(what + " at line " + std::to_string(line) + ", column " +
                  std::to_string(column)),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace acsum
