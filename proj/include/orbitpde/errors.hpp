#pragma once

#include <stdexcept>
#include <string>

namespace orbitpde {

/// Malformed problem configuration or boundary-data expression.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// a(s) violates positivity/monotonicity, or p <= 1.
class ProfileInvalid : public std::runtime_error {
 public:
  explicit ProfileInvalid(const std::string& what) : std::runtime_error(what) {}
};

/// Caller broke an operation's precondition (bad argument, wrong chart kind, ...).
class PreconditionError : public std::invalid_argument {
 public:
  explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical procedure could not produce a result (singular system, blow-up, ...).
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

/// The classification gate rejected a solve and no override was given.
class GateFailure : public std::runtime_error {
 public:
  explicit GateFailure(const std::string& what) : std::runtime_error(what) {}
};

/// Barrier ODE blew up before the required height was reached.
class BarrierNotFound : public std::runtime_error {
 public:
  BarrierNotFound(const std::string& what, double delta) : std::runtime_error(what), delta_(delta) {}
  double delta() const { return delta_; }

 private:
  double delta_;
};

}  // namespace orbitpde
