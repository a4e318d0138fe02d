#pragma once

// Radial harmonic analysis on the hyperbolic plane H^2 (curvature -1):
// spherical functions phi_lambda, the spherical transform
//   f^(lambda) = 2 pi int_0^R f(r) phi_lambda(r) sinh r dr,
// Plancherel density (2 pi)^{-1} lambda tanh(pi lambda) and the spectral
// Sobolev norms built from it.

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "adscft/errors.hpp"
#include "adscft/quadrature.hpp"

namespace adscft {

/// Raised when a spectral integral does not converge within its range.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Radial function f(r) on [0, R], zero beyond, sampled on a uniform grid and
/// interpolated by a cubic B-spline with f'(0) = 0.
class RadialFunction {
 public:
  RadialFunction(std::vector<double> samples, double radius);
  static RadialFunction sample(const std::function<double(double)>& f, double radius,
                               std::size_t n = 2001);

  double operator()(double r) const;
  double radius() const { return radius_; }
  const std::vector<double>& samples() const { return samples_; }

 private:
  struct Spline;
  std::vector<double> samples_;
  double radius_;
  std::shared_ptr<const Spline> spline_;
};

/// phi_lambda at geodesic radius r from the u-integral
///   (1/pi) int (cosh r + sinh r (1 - u^2)/(1 + u^2))^{i lambda - 1/2} du / (1 + u^2),
/// split at |u| = 1 with u -> 1/u on the tail. Throws QuadratureError if the
/// error estimate exceeds 1e-9.
double spherical_function(double lambda, double r);

/// The same value from the theta-integral
///   (1/(2 pi)) int_{-pi}^{pi} (cosh r - sinh r cos theta)^{-(i lambda + 1/2)} d theta.
double spherical_function_theta(double lambda, double r);

/// (2 pi)^{-1} lambda tanh(pi lambda).
double plancherel_density(double lambda);

/// 2 pi int_0^R f(r) phi_lambda(r) sinh r dr at each lambda, evaluated on
/// `workers` threads.
std::vector<double> spherical_transform(const RadialFunction& f, const std::vector<double>& lambdas,
                                        int workers = 1);
double spherical_transform(const RadialFunction& f, double lambda);

/// 2 pi int_0^R |f(r)|^2 sinh r dr.
double l2_norm_squared(const RadialFunction& f);

/// Uniform grid of n points on [lo, hi]; defaults to 512 nodes on [0, 10].
std::vector<double> lambda_grid(double lo = 0.0, double hi = 10.0, std::size_t n = 512);

struct SobolevOptions {
  double panel = 1.0;       // lambda panel width
  double max_lambda = 200.0;
  double tail_tol = 1e-10;  // stop once a panel adds less than this fraction
  int workers = 1;
};

/// sqrt(int_0^inf |f^(lambda)|^2 (lambda^2 + 1/4 + m2)^beta (2 pi)^{-1} lambda tanh(pi lambda) d lambda).
/// Throws DivergenceError if the integrand has not decayed by max_lambda.
double sobolev_norm(const RadialFunction& f, double beta, double m2,
                    const SobolevOptions& opt = {});

/// Normalized smooth bump chi_eps(r) = N exp(-1 / (1 - (r/eps)^2)) on r < eps,
/// with 2 pi int chi_eps sinh r dr = 1.
RadialFunction chi_eps(double eps, std::size_t n = 2001);

struct CauchyProbe {
  std::vector<double> lambdas;
  std::vector<double> differences;  // |chi^_eps - chi^_eps'| at each lambda
  double sup = 0.0;                 // sup of differences * (lambda^2 + 1/4 + m2)^{-delta/4}
  double argmax = 0.0;
};

/// Weighted sup-distance of the transforms of chi_eps and chi_eps'.
CauchyProbe chi_eps_cauchy_probe(double eps, double eps2, double delta, double m2 = 0.0,
                                 const std::vector<double>& lambdas = lambda_grid(),
                                 int workers = 1);

}  // namespace adscft
