#pragma once

#include <stdexcept>
#include <string>

namespace ks2d {

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Precondition violations: bad grid sizes, nonpositive motility inputs,
// mismatched grids, points off the boundary.
struct DomainError : Error {
  using Error::Error;
};

// Configuration problems: unknown keys, missing keys, malformed values.
struct ConfigError : Error {
  using Error::Error;
};

// File I/O and parse failures. Parse messages carry "path:line:".
struct IoError : Error {
  using Error::Error;
};

// Iterative linear solve did not reach the requested tolerance.
struct SolverError : Error {
  SolverError(const std::string& what, double rel_residual_, long iterations_)
      : Error(what), rel_residual(rel_residual_), iterations(iterations_) {}
  double rel_residual = 0.0;
  long iterations = 0;
};

// Poisson solve (a = 0) whose right-hand side has a nonzero mean.
struct IncompatibleRhsError : Error {
  using Error::Error;
};

// Critical-mass bisection endpoints did not classify as (Bounded, BlowupSuspected).
struct BracketError : Error {
  using Error::Error;
};

}  // namespace ks2d
