#pragma once

#include <stdexcept>
#include <string>

namespace mhdfvfe {

/// Invalid parameters or inputs (CLI exit status 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A time step could not be completed (CLI exit status 3).
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual = 0.0, int iterations = 0)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// A field was used with an operator defined on a different discrete space.
class SpaceMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace mhdfvfe
