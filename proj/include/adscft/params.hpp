#pragma once

#include <string>

#include "adscft/errors.hpp"

namespace adscft {

/// Selects the Delta_+/gamma_+ or Delta_-/gamma_- branch of a kernel family.
enum class KernelSign { plus, minus };

inline const char* to_string(KernelSign s) { return s == KernelSign::plus ? "plus" : "minus"; }

/// Boundary dimension d and mass^2 with every derived constant:
///   nu = sqrt(d^2 + 4 m^2) / 2,  Delta_pm = d/2 +- nu,
///   gamma_pm = Gamma(Delta_pm) / (2 pi^{d/2} Gamma(1 +- nu)),  c = 2 nu.
/// Integer nu (including 0) is rejected.
struct ModelParams {
  int d = 1;
  double m2 = 0.0;
  double nu = 0.0;
  double delta_plus = 0.0;
  double delta_minus = 0.0;
  double gamma_plus = 0.0;
  double gamma_minus = 0.0;
  double c = 0.0;

  static ModelParams from_mass(int d, double m2);
  static ModelParams from_nu(int d, double nu);

  double delta(KernelSign s) const { return s == KernelSign::plus ? delta_plus : delta_minus; }
  double gamma(KernelSign s) const { return s == KernelSign::plus ? gamma_plus : gamma_minus; }
  /// +nu for plus, -nu for minus.
  double signed_nu(KernelSign s) const { return s == KernelSign::plus ? nu : -nu; }

  /// Throws DomainError unless nu < d/2 (needed whenever alpha_- is a measure).
  void require_boundary_measure(const std::string& what) const;
};

}  // namespace adscft
