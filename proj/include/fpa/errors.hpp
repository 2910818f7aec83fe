#pragma once

#include <stdexcept>
#include <string>

namespace fpa {

/// Iterative scheme ran out of refinements before meeting its tolerance.
/// Carries the best estimate reached and the residual error bound.
class convergence_error : public std::runtime_error {
 public:
  convergence_error(const std::string& what, double best_estimate, double error_bound)
      : std::runtime_error(what), best_(best_estimate), bound_(error_bound) {}

  double best_estimate() const noexcept { return best_; }
  double error_bound() const noexcept { return bound_; }

 private:
  double best_;
  double bound_;
};

/// Conditioning event E_i(v_i) has zero probability (some F_j(v_i) = 0).
class degenerate_conditioning_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Instance outside a solver's supported class (zero density, disjoint supports, ...).
class unsupported_instance_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file (instance JSON, strategy CSV).
class parse_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fpa
