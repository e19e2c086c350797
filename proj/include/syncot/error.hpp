#pragma once

#include <stdexcept>
#include <string>

namespace syncot {

// Invalid problem or solver configuration (shapes, alpha, boundary data).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input values to a numerical routine (mass mismatch, empty measure).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN, divergence, or a root/iteration that failed to bracket.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Iterative solver exceeded its budget; carries the last residual.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Point outside the domain of a tabulated map.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed SOT1 file or configuration text.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace syncot
