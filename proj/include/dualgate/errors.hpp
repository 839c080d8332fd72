#pragma once

#include <stdexcept>
#include <string>

namespace dualgate {

// Precondition violated by a caller-supplied value.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Root or bracket search found nothing in the requested range.
class NotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fixed-step integrator left its accuracy envelope (norm, trace or positivity drift).
class StepSizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Adiabatic level tracking could not decide which eigenvector carries a label.
class LabelAmbiguity : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Result moved by more than the allowed tolerance when the Fock cutoff was raised.
class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every sample was rejected by a classical filter.
class EmptyResult : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Config file problem; `line` is 1-based, 0 when the error is not tied to a line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace dualgate
