#pragma once

#include <stdexcept>

namespace adscft {

/// Argument outside the documented domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A matrix factorization failed or an operator that must be positive
/// definite is not.
class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace adscft
