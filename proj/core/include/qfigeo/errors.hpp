#pragma once

#include <stdexcept>
#include <string>

namespace qfigeo {

// Failure categories surfaced by the library. Parse/validation codes map to
// CLI exit code 2, the numerical codes to exit code 3.
enum class Errc {
  not_hermitian,
  convergence_failure,
  not_psd,
  unknown_family,
  domain_error,
  invariant_violation,
  dimension_mismatch,
  missing_second_derivatives,
  basis_mismatch,
  degenerate_kernel_needs_direction,
  extrapolation_diverged,
  invalid_nu,
  rho0_not_full_rank,
  refused_pathological_point,
  parse_error,
  validation_error,
  numerical_error,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  Errc code() const { return code_; }

  // Input-side problems (bad scenario, bad arguments) vs numerical failures.
  bool is_validation() const {
    return code_ == Errc::parse_error || code_ == Errc::validation_error ||
           code_ == Errc::unknown_family || code_ == Errc::invalid_nu ||
           code_ == Errc::dimension_mismatch;
  }

 private:
  Errc code_;
};

}  // namespace qfigeo
