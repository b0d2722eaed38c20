#pragma once

#include <stdexcept>
#include <string>

namespace fraclab {

/// Precondition on argument ranges violated (s outside (0,1), z <= 0, ...).
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// An operation was called with data that violates its contract
/// (wrong tail model, perturbation with nonzero tail, ...).
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Iteration or quadrature failed to meet its tolerance budget.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what, double residual = 0.0)
      : std::runtime_error(what), residual(residual) {}
  double residual;
};

}  // namespace fraclab
