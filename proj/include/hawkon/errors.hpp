#pragma once

#include <stdexcept>
#include <string>

namespace hawkon {

// Error taxonomy. CLI maps ConfigError -> exit 2, the numerical family -> exit 3.

struct ConfigError : std::runtime_error {
  int line = 0;            // 0 when not tied to a source line
  std::string field;       // dotted path, e.g. "model.h.alpha"
  ConfigError(std::string msg, int line_ = 0, std::string field_ = {})
      : std::runtime_error(std::move(msg)), line(line_), field(std::move(field_)) {}
};

struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A model object violates its own contract (negative rates, h < 0, ...).
struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operation called in a state its preconditions forbid.
struct InvalidState : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Divergence, non-convergence, non-dominatable bounds.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Work refused because it exceeds a hard resource cutoff.
struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Simulation aborted mid-run; carries how far it got.
struct ExplosionError : NumericalError {
  double reached_time;
  long long events;
  ExplosionError(std::string msg, double t, long long n)
      : NumericalError(std::move(msg)), reached_time(t), events(n) {}
};

}  // namespace hawkon
