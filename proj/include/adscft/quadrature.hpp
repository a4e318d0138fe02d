#pragma once

// Thin wrappers over the Boost.Math quadrature engines. Every routine returns
// the integral together with the engine's own error estimate (difference of
// embedded rules), which is what EvalResult::est_error reports downstream.

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace adscft {

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;

  QuadResult& operator+=(const QuadResult& other) {
    value += other.value;
    error += other.error;
    return *this;
  }
};

namespace quad {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Adaptive 31-point Gauss–Kronrod on [a, b]; infinite limits allowed.
template <class F>
QuadResult gauss_kronrod(F&& f, double a, double b, double rel_tol = 1e-13,
                         unsigned max_depth = 18) {
  double err = 0.0;
  double l1 = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, a, b, max_depth, rel_tol, &err, &l1);
  if (!std::isfinite(v)) {
    throw QuadratureError("gauss_kronrod: non-finite integral");
  }
  return {v, err};
}

/// Sum of Gauss–Kronrod integrals over consecutive breakpoints.
template <class F>
QuadResult gauss_kronrod_piecewise(F&& f, std::span<const double> breaks,
                                   double rel_tol = 1e-13,
                                   unsigned max_depth = 18) {
  QuadResult total;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (breaks[i + 1] > breaks[i]) {
      total += gauss_kronrod(f, breaks[i], breaks[i + 1], rel_tol, max_depth);
    }
  }
  return total;
}

/// Tanh-sinh on a finite interval. Tolerates integrable endpoint
/// singularities. `f` may take (x) or (x, xc) where xc is the signed distance
/// to the nearest endpoint.
template <class F>
QuadResult tanh_sinh(F&& f, double a, double b, double rel_tol = 1e-13) {
  // Abscissa tables are expensive to build. Boost 1.74 declares integrate()
  // non-const, but it only reads the shared tables.
  static boost::math::quadrature::tanh_sinh<double> engine(15);
  double err = 0.0;
  double l1 = 0.0;
  std::size_t levels = 0;
  const double v = engine.integrate(f, a, b, rel_tol, &err, &l1, &levels);
  if (!std::isfinite(v)) {
    throw QuadratureError("tanh_sinh: non-finite integral");
  }
  return {v, err * 0.5 * (b - a)};
}

/// Exp-sinh on [a, inf).
template <class F>
QuadResult exp_sinh(F&& f, double a, double rel_tol = 1e-13) {
  static boost::math::quadrature::exp_sinh<double> engine(9);
  double err = 0.0;
  double l1 = 0.0;
  std::size_t levels = 0;
  const double v = engine.integrate(f, a, kInf, rel_tol, &err, &l1, &levels);
  if (!std::isfinite(v)) {
    throw QuadratureError("exp_sinh: non-finite integral");
  }
  return {v, err};
}

inline void require_accuracy(const QuadResult& r, double rel_tol,
                             const std::string& what) {
  const double scale = std::max(std::abs(r.value), 1e-300);
  if (!(r.error <= rel_tol * scale) && r.error > 1e-300) {
    throw QuadratureError(what + ": estimated error " + std::to_string(r.error) +
                          " exceeds tolerance on value " +
                          std::to_string(r.value));
  }
}

}  // namespace quad
}  // namespace adscft
