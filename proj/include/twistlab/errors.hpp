#pragma once

#include <stdexcept>
#include <string>

namespace twistlab {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// Bad arguments or configuration. The CLI maps these to exit code 2.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error("ValidationError", what) {}
};

/// A numerical procedure failed to meet its contract. The CLI maps these to
/// exit code 3.
class NumericalError : public Error {
 public:
  NumericalError(std::string kind, const std::string& what)
      : Error(std::move(kind), what) {}
};

class NonConvergence : public NumericalError {
 public:
  explicit NonConvergence(const std::string& what)
      : NumericalError("NonConvergence", what) {}
};

class Divergence : public NumericalError {
 public:
  explicit Divergence(const std::string& what)
      : NumericalError("Divergence", what) {}
};

class ToleranceNotReached : public NumericalError {
 public:
  ToleranceNotReached(const std::string& what, double achievable)
      : NumericalError("ToleranceNotReached", what), achievable_(achievable) {}
  double achievable() const noexcept { return achievable_; }

 private:
  double achievable_;
};

class DegenerateInput : public NumericalError {
 public:
  explicit DegenerateInput(const std::string& what)
      : NumericalError("DegenerateInput", what) {}
};

class GapTooSmall : public NumericalError {
 public:
  explicit GapTooSmall(const std::string& what)
      : NumericalError("GapTooSmall", what) {}
};

class TailNotDecaying : public NumericalError {
 public:
  explicit TailNotDecaying(const std::string& what)
      : NumericalError("TailNotDecaying", what) {}
};

}  // namespace twistlab
