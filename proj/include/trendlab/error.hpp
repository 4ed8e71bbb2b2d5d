#pragma once

#include <stdexcept>
#include <string>

namespace trendlab {

// Base class for every domain error raised by the library. The CLI maps these
// to exit code 1; anything else is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data. `line` is 1-based, 0 when unknown.
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A precondition on arguments was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// The in/out/live sample discipline was broken.
class ProtocolViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace trendlab
