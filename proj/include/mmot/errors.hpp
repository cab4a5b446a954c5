#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mmot {

/// Base class for all solver-library failures.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// The density cannot support the requested operation (zero total mass,
/// non-finite values, CDF not invertible at the required accuracy).
class DegenerateDensityError : public Error {
 public:
  using Error::Error;
};

/// Quadrature or cost evaluation failed while assembling problem data.
class AssemblyError : public Error {
 public:
  AssemblyError(const std::string& what, int element_index)
      : Error(what + " (element " + std::to_string(element_index) + ")"),
        element(element_index) {}
  int element;
};

/// Projection onto the transport polytope did not converge.
class ProjectionError : public Error {
 public:
  ProjectionError(const std::string& what, double residual, long iterations)
      : Error(what + " (residual " + std::to_string(residual) + " after " +
              std::to_string(iterations) + " iterations)"),
        final_residual(residual),
        iters(iterations) {}
  double final_residual;
  long iters;
};

/// A run configuration failed validation; `issues` lists every offending key.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : Error(join(problems)), issues(std::move(problems)) {}
  std::vector<std::string> issues;

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s = "invalid configuration:";
    for (const auto& p : v) s += "\n  - " + p;
    return s;
  }
};

}  // namespace mmot
