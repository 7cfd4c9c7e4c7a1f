#pragma once

#include <stdexcept>
#include <string>

namespace capbound {

// Base of every error the library raises. The CLI maps the subclasses onto
// exit codes: user-side problems (domain/validation/parse) exit 1, numeric
// and capability failures exit 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside an operation's precondition.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or model parameters.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed structured text; carries the 1-based line number.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Overflow, non-convergence or a failed iteration.
class NumericError : public Error {
 public:
  using Error::Error;
};

// The requested combination is not supported (dimension limits, missing density).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// Structural model problem, e.g. a reducible Markov chain.
class ModelError : public Error {
 public:
  using Error::Error;
};

// The Lundberg equation has no positive root for the given model.
class NoRootError : public Error {
 public:
  using Error::Error;
};

}  // namespace capbound
