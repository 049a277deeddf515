#pragma once

#include <stdexcept>
#include <string>

namespace hems {

/// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (CSV rows, config lines).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Input that parsed fine but violates an invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Argument outside a function's mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Least-squares fit that cannot be computed or is rejected.
class FitError : public Error {
 public:
  using Error::Error;
};

/// A build-time or solve-time infeasibility.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace hems
