#pragma once

// Upper half-space model of H^{d+1} and its Lorentz hyperboloid model.
// Isometries live only in the Lorentz model, as matrices in O^+(d+1,1);
// half-space actions always go through embed / unembed.

#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "adscft/params.hpp"

namespace adscft {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Boundary points are plain vectors in R^d.
using BoundaryPoint = Vector;

class GeometryError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct BulkPoint {
  double z = 1.0;
  Vector x;

  BulkPoint() = default;
  BulkPoint(double z_, Vector x_);
  int dim() const { return static_cast<int>(x.size()); }
};

/// u = ((z - z')^2 + |x - x'|^2) / (2 z z')
double chordal_u(const BulkPoint& p, const BulkPoint& q);

/// (z, x) -> (x/z, -(z^2+x^2-1)/(2z), (z^2+x^2+1)/(2z))
Vector embed_lorentz(const BulkPoint& p);

/// Inverse of embed_lorentz; throws GeometryError if zeta_{d+1}+zeta_{d+2} <= 0.
BulkPoint unembed_lorentz(const Vector& zeta);

/// zeta^T eta zeta with eta = diag(1, ..., 1, -1).
double minkowski_norm2(const Vector& zeta);

class Isometry {
 public:
  /// Validates L^T eta L = eta and L(d+1, d+1) > 0.
  explicit Isometry(Matrix lorentz);

  static Isometry identity(int d);
  /// Rotation by `angle` in the (zeta_i, zeta_j) plane, i, j < d + 1. Indices
  /// below d rotate boundary coordinates; index d mixes in zeta_{d+1}.
  static Isometry rotation(int d, int i, int j, double angle);
  /// Boost with the given rapidity in the (zeta_i, zeta_{d+2}) plane, i <= d.
  static Isometry boost(int d, int i, double rapidity);
  /// Boost along zeta_{d+1}: (z, x) -> e^{-t} (z, x).
  static Isometry dilation(int d, double rapidity);
  /// (z, x) -> (z, x + a).
  static Isometry translation(const Vector& a);
  /// (z, x) -> (z, x) / (z^2 + |x|^2).
  static Isometry inversion(int d);
  /// x_axis -> -x_axis.
  static Isometry reflection(int d, int axis);

  /// Product of `factors` random rotations and boosts with |rapidity| <= 2.
  static Isometry random(int d, std::mt19937_64& rng, int factors = 4);

  int dim() const { return static_cast<int>(lorentz_.rows()) - 2; }
  const Matrix& matrix() const { return lorentz_; }
  Isometry inverse() const;
  Isometry operator*(const Isometry& other) const;

 private:
  Matrix lorentz_;
};

BulkPoint apply_isometry(const Isometry& g, const BulkPoint& p);

struct BoundaryAction {
  BoundaryPoint point;  // g(x)
  double jac = 1.0;     // |det dg(x)/dx|
};

/// g(x) as the z -> 0 limit of the x-component of g(z, x), Richardson
/// extrapolated in z^2 from two small z, and its Jacobian determinant from
/// Richardson-improved central differences. z0 and step are scaled down by the
/// distance from x to the pole of g when it is below 1. Throws GeometryError if x is (close
/// to) the point that g sends to infinity.
BoundaryAction boundary_action(const Isometry& g, const BoundaryPoint& x,
                               double z0 = 1e-4, double step = 1e-3);

/// Exact boundary map through the null-cone representation of x. Used to
/// cross-check the limit construction.
BoundaryPoint boundary_map_exact(const Isometry& g, const BoundaryPoint& x);

/// Conformal factor l of g at x from the null-cone action, so that
/// |det dg(x)/dx| = l^d. Diverges at the pole of g.
double conformal_factor(const Isometry& g, const BoundaryPoint& x);

}  // namespace adscft
