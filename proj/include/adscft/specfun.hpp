#pragma once

// Real special functions behind the hyperbolic-space propagators: Gamma,
// Gauss 2F1 on the real slice, and the Bessel functions K_nu, J_nu (plus the
// product I_nu K_nu used by the bulk pairings).

#include "adscft/errors.hpp"

namespace adscft {

struct EvalResult {
  double value = 0.0;
  double est_error = 0.0;  // absolute, >= 0
};

/// Gamma function via a Lanczos approximation (g = 7, 9 terms) with the
/// reflection formula below 1/2. Throws DomainError at 0, -1, -2, ...
double gamma_fn(double x);

enum class Hyp2f1Method {
  automatic,
  series,       // ascending series, |zeta| <= 1/2 (or any |zeta| < 1 if forced)
  euler,        // Euler integral, requires c > b > 0 (or c > a > 0)
  pfaff_series  // series in zeta/(zeta-1), for zeta < 0
};

/// Gauss hypergeometric function F(a, b; c; zeta) for real zeta < 1.
///
/// automatic: series for |zeta| <= 1/2; Euler integral otherwise when either
/// parameter ordering satisfies c > b > 0; the Pfaff-transformed series for
/// negative zeta when neither does.
EvalResult hyp2f1(double a, double b, double c, double zeta,
                  Hyp2f1Method method = Hyp2f1Method::automatic);

enum class BesselKMethod { automatic, integral, asymptotic };

/// Modified Bessel function of the second kind, nu >= 0, x > 0.
/// For x <= 30 the defining t-integral is evaluated after t = (x/2) e^s,
/// i.e. K_nu(x) = int_0^inf exp(-x cosh s) cosh(nu s) ds; above 30 the
/// large-argument expansion is used.
EvalResult bessel_k(double nu, double x,
                    BesselKMethod method = BesselKMethod::automatic);

enum class BesselJMethod { automatic, series, poisson, asymptotic };

/// Bessel function of the first kind, nu > -1/2, u >= 0.
///   series:     ascending series summed in 113-bit arithmetic
///   poisson:    2^{1-nu}/(sqrt(pi) Gamma(nu+1/2)) u^nu
///               * int_0^1 (1-t^2)^{nu-1/2} cos(u t) dt
///   asymptotic: Hankel expansion (u large)
EvalResult bessel_j(double nu, double u,
                    BesselJMethod method = BesselJMethod::automatic);

struct HankelPQ {
  double p = 1.0;
  double q = 0.0;
  double error = 0.0;  // size of the last retained term
};

/// Hankel's large-argument amplitudes: J_nu(u) = sqrt(2/(pi u)) (P cos chi - Q sin chi)
/// with chi = u - nu pi/2 - pi/4. Series truncated at its smallest term.
HankelPQ hankel_pq(double nu, double u);

/// Modified Bessel function of the first kind, nu >= 0, x >= 0 (series /
/// large-argument expansion). Used only through bessel_ik_product.
EvalResult bessel_i(double nu, double x);

/// I_nu(x) K_nu(x) for nu > 0, x > 0. Equals int_0^inf J_nu(t)^2 t/(t^2+x^2)dt.
EvalResult bessel_ik_product(double nu, double x);

}  // namespace adscft
