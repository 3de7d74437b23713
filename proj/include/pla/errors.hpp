#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

#include "pla/types.hpp"

namespace pla {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller violated an operation's stated precondition (step too large, bad
// parameter range, malformed input).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// A potential lacks a derivative order the operation needs.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class SingularError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// An iterative solver hit its cap. Carries the best iterate seen.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, Vector best, double residual)
      : Error(what), best_(std::move(best)), residual_(residual) {}

  const Vector& best_iterate() const { return best_; }
  double residual() const { return residual_; }

 private:
  Vector best_;
  double residual_;
};

// Wraps a failure inside one chain of an ensemble.
class ChainError : public Error {
 public:
  ChainError(std::size_t chain, const std::string& what)
      : Error("chain " + std::to_string(chain) + ": " + what), chain_(chain) {}

  std::size_t chain() const { return chain_; }

 private:
  std::size_t chain_;
};

}  // namespace pla
