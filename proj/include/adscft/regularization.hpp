#pragma once

// Bounded approximations of the boundary covariance alpha_- (multiplier
// cutoff chi_n), and the counterterms that turn the divergent scaled bulk
// pairing z^{-d-2nu} (G_+ f_z, f_z) into (f, alpha_+ f) as z -> 0.

#include <vector>

#include "adscft/boundary_function.hpp"
#include "adscft/params.hpp"
#include "adscft/quadrature.hpp"

namespace adscft {

struct CutoffSpec {
  int n = 1;
  explicit CutoffSpec(int n_);
};

/// chi_n(kappa): n^{2nu} on [0, 1/n], kappa^{-2nu} on (1/n, n], n^{-2nu} beyond.
double cutoff_chi(double nu, const CutoffSpec& spec, double kappa);

/// (2 pi)^{d/2} C_{-nu} 2^{2nu} chi_n(|k|): the multiplier of alpha_- with
/// |k|^{-2nu} replaced by chi_n.
double cutoff_multiplier(const ModelParams& p, const CutoffSpec& spec, double kappa);
double inverse_cutoff_multiplier(const ModelParams& p, const CutoffSpec& spec, double kappa);

/// (f, alpha_-^n g) and (f, (alpha_-^n)^{-1} g).
QuadResult cutoff_pairing(const ModelParams& p, const CutoffSpec& spec, const BoundaryFunction& f,
                          const BoundaryFunction& g, double rel_tol = 1e-12);
QuadResult inverse_cutoff_pairing(const ModelParams& p, const CutoffSpec& spec,
                                  const BoundaryFunction& f, const BoundaryFunction& g,
                                  double rel_tol = 1e-12);

/// 2^{1-nu} / (sqrt(pi) Gamma(nu + 1/2)), so that
/// J_nu(u) = A u^nu int_0^1 cos(ut) (1-t^2)^{nu-1/2} dt.
double poisson_prefactor(double nu);

/// P(u) = int_0^1 cos(ut) (1-t^2)^{nu-1/2} dt = J_nu(u) / (A u^nu).
double poisson_profile(double nu, double u);

inline constexpr double kMaxCorrNu = 2.5;

struct CorrCoefficients {
  double nu = 0.0;
  std::vector<double> a;  // a_0 .. a_{floor(nu)}
};

/// a_j = int_0^inf w^{2(nu-j)-1} P(w)^2 dw for j = 0..floor(nu). The integral
/// runs numerically to `cutoff`; the remainder uses Hankel's expansion.
CorrCoefficients corr_coefficients(double nu, double cutoff = 60.0);

/// A^2 sum_j z^{-2(nu-j)} (-1)^j a_j int |f^|^2 |k|^{2j} dk.
double corr_term(const ModelParams& p, const CorrCoefficients& coeffs, double z,
                 const BoundaryFunction& f);

/// z^{-d-2nu} (G_+ f_z, f_z) = z^{-2nu} int |f^(k)|^2 I_nu(|k| z) K_nu(|k| z) dk.
double raw_scaled_pairing(const ModelParams& p, double z, const BoundaryFunction& f);

/// raw - corr_term, computed from the subtracted remainder
///   A^2 (-1)^{N+1} int_0^inf w^{2(nu-N)-1} P(zw)^2 int |f^|^2 k^{2N+2}/(w^2+k^2) dk dw,
/// N = floor(nu), which avoids the cancellation between raw and corr_term.
double corrected_scaled_pairing(const ModelParams& p, double z, const BoundaryFunction& f);

/// -pi / (2 sin(nu pi)) (2^nu Gamma(nu+1))^{-2} int |f^|^2 |k|^{2nu} dk.
double alpha_plus_closed_form(const ModelParams& p, const BoundaryFunction& f);

struct RegularizedRow {
  double z = 0.0;
  double raw = 0.0;
  double corr = 0.0;
  double corrected = 0.0;
};

struct RegularizedLimit {
  std::vector<RegularizedRow> rows;
  double limit = 0.0;         // boundary_pairing(plus, f, f)
  double limit_gap = 0.0;     // |corrected(z_last) - limit|
  double relative_gap = 0.0;  // limit_gap / |limit|
  double raw_slope = 0.0;     // least-squares slope of log raw against log z, last decade of z
};

/// Default z-sequence {1e-1, 3e-2, 1e-2, 3e-3, 1e-3}.
std::vector<double> default_z_sequence();

RegularizedLimit regularized_limit_check(const ModelParams& p, const BoundaryFunction& f,
                                         const std::vector<double>& zs = default_z_sequence());

}  // namespace adscft
