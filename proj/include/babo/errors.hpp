#pragma once

#include <stdexcept>
#include <string>

namespace babo {

// Precondition violated by the caller (dimension mismatch, f_b > f_min, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of a transform (e.g. log of a
// non-positive shifted value).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Factorization or optimization failed even after stabilization.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Gradient requested where it does not exist (zero predictive spread).
class UndefinedGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad experiment configuration, detected before anything runs.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Objective returned a non-finite value.
class EvaluationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace babo
