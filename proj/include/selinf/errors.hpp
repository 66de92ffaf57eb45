#pragma once

#include <stdexcept>
#include <string>

namespace selinf {

/// Selection produced an empty active set; inference has nothing to report.
class EmptySelectionError : public std::runtime_error {
 public:
  explicit EmptySelectionError(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative solver failed to reach its tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Conditioning or factorization failure in otherwise valid input.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace selinf
