#pragma once

// Bulk-to-bulk Green's functions G_pm on H^{d+1}, bulk-to-boundary kernels
// H_pm, boundary kernels alpha_pm, their Fourier transforms, and the numerical
// check of the splitting G_- = G_+ + c^2 H_+ alpha_- H_+.
//
// Fourier convention: f^(k) = (2 pi)^{-d/2} int f(x) e^{-ikx} dx. A
// convolution kernel a(x - y) then acts as the multiplier (2 pi)^{d/2} a^(k),
// and the boundary pairings are
//   (f, alpha g) = (2 pi)^{d/2} int conj(f^(k)) alpha^(k) g^(k) dk.

#include <complex>

#include "adscft/boundary_function.hpp"
#include "adscft/geometry.hpp"
#include "adscft/params.hpp"
#include "adscft/quadrature.hpp"

namespace adscft {

/// gamma_s (2u)^{-Delta_s} F(Delta_s, Delta_s + (1-d)/2; 2 Delta_s + 1 - d; -2/u).
/// Throws DomainError at coincident points.
double green(const ModelParams& p, KernelSign s, const BulkPoint& a, const BulkPoint& b);

/// gamma_s (z / (z^2 + |x - x'|^2))^{Delta_s}
double bulk_to_boundary(const ModelParams& p, KernelSign s, const BulkPoint& a,
                        const BoundaryPoint& xp);

/// gamma_s |x - y|^{-2 Delta_s}, x != y.
double boundary_kernel(const ModelParams& p, KernelSign s, const BoundaryPoint& x,
                       const BoundaryPoint& y);

/// Radial part of the transform of x' -> H_s(z, 0; x'):
///   (2 pi)^{-d/2} Gamma(1 +- nu)^{-1} (|k|/2)^{+-nu} z^{d/2} K_nu(|k| z).
double bulk_to_boundary_fourier_radial(const ModelParams& p, KernelSign s, double z,
                                       double kappa);

/// Transform of x' -> H_s(a; x'): the radial part times e^{-ik.x}.
std::complex<double> bulk_to_boundary_fourier(const ModelParams& p, KernelSign s,
                                              const BulkPoint& a, const Vector& k);

/// C_{-nu} (|k|/2)^{+-2nu} with C_{-nu} = Gamma(-+nu) / (2 (2 pi)^{d/2} Gamma(1 +- nu)).
double boundary_kernel_fourier(const ModelParams& p, KernelSign s, double kappa);

/// (f, alpha_s g). For s = minus requires nu < d/2; for s = plus the value is
/// the analytically continued pairing.
QuadResult boundary_pairing(const ModelParams& p, KernelSign s, const BoundaryFunction& f,
                            const BoundaryFunction& g, double rel_tol = 1e-12);

/// int H_s(a, y) f(y) dy, computed on the Fourier side.
QuadResult smeared_bulk_to_boundary(const ModelParams& p, KernelSign s, const BulkPoint& a,
                                    const BoundaryFunction& f, double rel_tol = 1e-12);

struct SplittingCheck {
  double g_minus = 0.0;
  double g_plus = 0.0;
  double boundary_term = 0.0;      // c^2 int H_+ alpha_- H_+
  double boundary_error = 0.0;
  double intermediate_term = 0.0;  // c int H_+ H_-
  double intermediate_error = 0.0;
  double residual = 0.0;               // G_- - G_+ - boundary_term
  double intermediate_residual = 0.0;  // G_- - G_+ - intermediate_term
};

/// Both sides of the splitting identity at (a, b). Requires nu < d/2.
/// `rel_tol` controls the k-quadrature (the mesh refinement knob).
SplittingCheck splitting_residual(const ModelParams& p, const BulkPoint& a, const BulkPoint& b,
                                  double rel_tol = 1e-11);

}  // namespace adscft
