#pragma once

#include <stdexcept>
#include <string>

namespace rrbeam {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidInput : Error {
  using Error::Error;
};

struct SingularMatrix : Error {
  using Error::Error;
};

struct DegenerateGeometry : Error {
  using Error::Error;
};

struct DegenerateChannel : Error {
  using Error::Error;
};

struct InvalidNoise : Error {
  using Error::Error;
};

struct IndefiniteSurrogate : Error {
  using Error::Error;
};

struct IndefiniteAnchor : Error {
  using Error::Error;
};

struct NotFeasibleAfterRescale : Error {
  using Error::Error;
};

// Carries the R&R iteration at which the conic solve failed.
struct SolverFailure : Error {
  SolverFailure(const std::string& what, int iteration)
      : Error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration(iteration) {}
  int iteration;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace rrbeam
