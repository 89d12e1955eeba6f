#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace geork {

/// Base class for every error raised by the library. `module()` names the
/// subsystem that raised it so front ends can produce one-line diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(what), module_(std::move(module)) {}
  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

class InvalidArgument : public Error {
 public:
  InvalidArgument(std::string module, const std::string& what) : Error(std::move(module), what) {}
};

/// Evaluation outside the domain of a Hamiltonian (e.g. Kepler at a collision).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("dynamics", what) {}
};

/// Raised when a numerically guarded linear algebra step is too ill-conditioned.
class IllConditioned : public Error {
 public:
  explicit IllConditioned(const std::string& what) : Error("tableau", what) {}
};

class NonConvergence : public Error {
 public:
  explicit NonConvergence(const std::string& what) : Error("integrator", what) {}
};

class Divergence : public Error {
 public:
  explicit Divergence(const std::string& what) : Error("integrator", what) {}
};

class AlphaNotFound : public Error {
 public:
  explicit AlphaNotFound(const std::string& what) : Error("integrator", what) {}
};

class MinStepReached : public Error {
 public:
  explicit MinStepReached(const std::string& what) : Error("integrator", what) {}
};

/// A fixed-step run stopped at `step()` (0-based) because of `cause`.
class IntegrationFailed : public Error {
 public:
  IntegrationFailed(std::size_t step, const Error& cause)
      : Error(cause.module(), "step " + std::to_string(step) + ": " + cause.what()), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("experiments", what) {}
};

}  // namespace geork
