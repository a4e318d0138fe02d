#pragma once

// Boundary test functions f(x) = sum_i w_i exp(-|x - c_i|^2 / (2 sigma_i^2))
// on R^d, with Fourier transform
//   f^(k) = (2 pi)^{-d/2} int f(x) e^{-ikx} dx
//         = sum_i w_i sigma_i^d exp(-sigma_i^2 |k|^2 / 2) e^{-i k c_i}.

#include <complex>
#include <functional>
#include <vector>

#include "adscft/geometry.hpp"
#include "adscft/quadrature.hpp"

namespace adscft {

struct GaussianBump {
  Vector center;
  double width = 1.0;
  double weight = 1.0;
};

class BoundaryFunction {
 public:
  explicit BoundaryFunction(std::vector<GaussianBump> terms);

  static BoundaryFunction bump(const Vector& center, double width, double weight = 1.0);
  /// `n` bumps with centers ~ N(offset, spread^2), widths in [w_lo, w_hi],
  /// weights in [-1, 1] (or [0.2, 1] when `positive`).
  static BoundaryFunction random(int d, int n, std::mt19937_64& rng, double spread = 1.0,
                                 double w_lo = 0.3, double w_hi = 1.0, bool positive = false,
                                 const Vector& offset = Vector());

  int dim() const { return static_cast<int>(terms_.front().center.size()); }
  const std::vector<GaussianBump>& terms() const { return terms_; }

  double value(const Vector& x) const;
  std::complex<double> fourier(const Vector& k) const;

  /// Average over |k| = kappa of conj(f^(k)) g^(k).
  double cross_spectrum(const BoundaryFunction& g, double kappa) const;

  /// x_axis -> -x_axis.
  BoundaryFunction reflected(int axis) const;
  BoundaryFunction scaled(double s) const;
  /// x -> x + a.
  BoundaryFunction shifted(const Vector& a) const;
  BoundaryFunction operator+(const BoundaryFunction& other) const;

  /// Fraction of sum_i |w_i| sigma_i^d carried inside {sign * x_axis > 0}.
  double halfspace_mass(int axis, int sign) const;

  double min_width() const;
  double max_width() const;
  /// Largest |c_i - c'_j| between the two families.
  double max_separation(const BoundaryFunction& g) const;

 private:
  std::vector<GaussianBump> terms_;
};

/// Area of the unit sphere S^{d-1}.
double sphere_area(int d);

/// Average of e^{i k.v} over |k| = 1 as a function of s = |v|:
/// Gamma(d/2) (2/s)^{d/2-1} J_{d/2-1}(s).
double sphere_phase_average(int d, double s);

/// int_{R^d} conj(f^(k)) m(|k|) g^(k) dk for a radial multiplier m, which may
/// carry an integrable power singularity at |k| = 0. `knots` lists radii where
/// m has a kink; they become segment boundaries.
QuadResult radial_pairing(const BoundaryFunction& f, const BoundaryFunction& g,
                          const std::function<double(double)>& m, double rel_tol = 1e-12,
                          const std::vector<double>& knots = {});

/// int |f^(k)|^2 |k|^{2j} dk. Closed form for a single bump, radial_pairing
/// for mixtures.
double spectral_moment(const BoundaryFunction& f, double j);

}  // namespace adscft
