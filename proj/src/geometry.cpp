#include "adscft/geometry.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "adscft/specfun.hpp"

namespace adscft {

// ---------------------------------------------------------------------------
// ModelParams

namespace {

ModelParams derive(int d, double m2, double nu) {
  if (d < 1) {
    throw DomainError("ModelParams: boundary dimension d must be >= 1");
  }
  if (!(nu > 0.0) || !std::isfinite(nu)) {
    throw DomainError("ModelParams: nu must be positive (m^2 > -d^2/4)");
  }
  if (std::abs(nu - std::round(nu)) < 1e-12) {
    throw DomainError("ModelParams: integer nu excluded (nu = " + std::to_string(nu) + ")");
  }
  ModelParams p;
  p.d = d;
  p.m2 = m2;
  p.nu = nu;
  p.delta_plus = 0.5 * d + nu;
  p.delta_minus = 0.5 * d - nu;
  const double pi_half_d = std::pow(std::numbers::pi, 0.5 * d);
  p.gamma_plus = gamma_fn(p.delta_plus) / (2.0 * pi_half_d * gamma_fn(1.0 + nu));
  // Delta_- can hit a pole of Gamma only at nonpositive integers; those
  // parameter points have no G_- kernel.
  p.gamma_minus = (p.delta_minus <= 0.0 && p.delta_minus == std::floor(p.delta_minus))
                      ? 0.0
                      : gamma_fn(p.delta_minus) / (2.0 * pi_half_d * gamma_fn(1.0 - nu));
  p.c = 2.0 * nu;
  return p;
}

}  // namespace

ModelParams ModelParams::from_mass(int d, double m2) {
  const double disc = static_cast<double>(d) * d + 4.0 * m2;
  if (!(disc > 0.0)) {
    throw DomainError("ModelParams: m^2 must exceed -d^2/4");
  }
  return derive(d, m2, 0.5 * std::sqrt(disc));
}

ModelParams ModelParams::from_nu(int d, double nu) {
  return derive(d, nu * nu - 0.25 * d * d, nu);
}

void ModelParams::require_boundary_measure(const std::string& what) const {
  if (!(nu < 0.5 * d)) {
    throw DomainError(what + ": requires nu < d/2 (nu = " + std::to_string(nu) +
                      ", d = " + std::to_string(d) + ")");
  }
}

// ---------------------------------------------------------------------------
// Points and embedding

BulkPoint::BulkPoint(double z_, Vector x_) : z(z_), x(std::move(x_)) {
  if (!(z > 0.0)) {
    throw GeometryError("BulkPoint: z must be positive");
  }
}

double chordal_u(const BulkPoint& p, const BulkPoint& q) {
  const double dz = p.z - q.z;
  return (dz * dz + (p.x - q.x).squaredNorm()) / (2.0 * p.z * q.z);
}

Vector embed_lorentz(const BulkPoint& p) {
  const int d = p.dim();
  const double r2 = p.z * p.z + p.x.squaredNorm();
  Vector zeta(d + 2);
  zeta.head(d) = p.x / p.z;
  zeta(d) = -(r2 - 1.0) / (2.0 * p.z);
  zeta(d + 1) = (r2 + 1.0) / (2.0 * p.z);
  return zeta;
}

BulkPoint unembed_lorentz(const Vector& zeta) {
  const int d = static_cast<int>(zeta.size()) - 2;
  const double s = zeta(d) + zeta(d + 1);
  if (!(s > 0.0)) {
    throw GeometryError("unembed_lorentz: zeta_{d+1} + zeta_{d+2} <= 0");
  }
  return BulkPoint(1.0 / s, zeta.head(d) / s);
}

double minkowski_norm2(const Vector& zeta) {
  const int n = static_cast<int>(zeta.size());
  return zeta.head(n - 1).squaredNorm() - zeta(n - 1) * zeta(n - 1);
}

// ---------------------------------------------------------------------------
// Isometry

namespace {

Matrix eta_matrix(int n) {
  Matrix eta = Matrix::Identity(n, n);
  eta(n - 1, n - 1) = -1.0;
  return eta;
}

}  // namespace

Isometry::Isometry(Matrix lorentz) : lorentz_(std::move(lorentz)) {
  const auto n = lorentz_.rows();
  if (n < 3 || lorentz_.cols() != n) {
    throw GeometryError("Isometry: expected a square matrix of size d+2 >= 3");
  }
  const Matrix eta = eta_matrix(static_cast<int>(n));
  const double defect = (lorentz_.transpose() * eta * lorentz_ - eta).norm();
  if (defect > 1e-9 * std::max(1.0, lorentz_.squaredNorm())) {
    throw GeometryError("Isometry: matrix does not preserve the Minkowski form");
  }
  if (!(lorentz_(n - 1, n - 1) > 0.0)) {
    throw GeometryError("Isometry: matrix is not orthochronous");
  }
}

Isometry Isometry::identity(int d) { return Isometry(Matrix::Identity(d + 2, d + 2)); }

Isometry Isometry::rotation(int d, int i, int j, double angle) {
  if (i < 0 || j < 0 || i > d || j > d || i == j) {
    throw GeometryError("Isometry::rotation: plane indices must be distinct and <= d");
  }
  Matrix m = Matrix::Identity(d + 2, d + 2);
  m(i, i) = std::cos(angle);
  m(j, j) = std::cos(angle);
  m(i, j) = -std::sin(angle);
  m(j, i) = std::sin(angle);
  return Isometry(m);
}

Isometry Isometry::boost(int d, int i, double rapidity) {
  if (i < 0 || i > d) {
    throw GeometryError("Isometry::boost: axis must be in 0..d");
  }
  Matrix m = Matrix::Identity(d + 2, d + 2);
  m(i, i) = std::cosh(rapidity);
  m(d + 1, d + 1) = std::cosh(rapidity);
  m(i, d + 1) = std::sinh(rapidity);
  m(d + 1, i) = std::sinh(rapidity);
  return Isometry(m);
}

Isometry Isometry::dilation(int d, double rapidity) { return boost(d, d, rapidity); }

Isometry Isometry::translation(const Vector& a) {
  const int d = static_cast<int>(a.size());
  // In light-cone form: s_+ = zeta_{d+1} + zeta_{d+2} = 1/z is fixed,
  // zeta_i -> zeta_i + a_i s_+, s_- = zeta_{d+2} - zeta_{d+1} picks up
  // 2 a.zeta + |a|^2 s_+.
  auto act = [&](const Vector& zeta) {
    const double sp = zeta(d) + zeta(d + 1);
    const double sm = zeta(d + 1) - zeta(d);
    Vector out(d + 2);
    out.head(d) = zeta.head(d) + a * sp;
    const double sm_new = sm + 2.0 * a.dot(zeta.head(d)) + a.squaredNorm() * sp;
    out(d) = 0.5 * (sp - sm_new);
    out(d + 1) = 0.5 * (sp + sm_new);
    return out;
  };
  Matrix m(d + 2, d + 2);
  for (int k = 0; k < d + 2; ++k) {
    m.col(k) = act(Vector::Unit(d + 2, k));
  }
  return Isometry(m);
}

Isometry Isometry::inversion(int d) {
  Matrix m = Matrix::Identity(d + 2, d + 2);
  m(d, d) = -1.0;
  return Isometry(m);
}

Isometry Isometry::reflection(int d, int axis) {
  if (axis < 0 || axis >= d) {
    throw GeometryError("Isometry::reflection: axis must be in 0..d-1");
  }
  Matrix m = Matrix::Identity(d + 2, d + 2);
  m(axis, axis) = -1.0;
  return Isometry(m);
}

Isometry Isometry::random(int d, std::mt19937_64& rng, int factors) {
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> rapidity(-2.0, 2.0);
  std::uniform_int_distribution<int> axis(0, d);
  Matrix m = Matrix::Identity(d + 2, d + 2);
  for (int f = 0; f < factors; ++f) {
    const int i = axis(rng);
    int j = axis(rng);
    if (j == i) {
      j = (i + 1) % (d + 1);
    }
    m = rotation(d, i, j, angle(rng)).matrix() * m;
    m = boost(d, axis(rng), rapidity(rng) / factors).matrix() * m;
  }
  return Isometry(m);
}

Isometry Isometry::inverse() const {
  const Matrix eta = eta_matrix(static_cast<int>(lorentz_.rows()));
  return Isometry(eta * lorentz_.transpose() * eta);
}

Isometry Isometry::operator*(const Isometry& other) const {
  if (other.lorentz_.rows() != lorentz_.rows()) {
    throw GeometryError("Isometry: dimension mismatch in composition");
  }
  return Isometry(lorentz_ * other.lorentz_);
}

BulkPoint apply_isometry(const Isometry& g, const BulkPoint& p) {
  if (g.dim() != p.dim()) {
    throw GeometryError("apply_isometry: dimension mismatch");
  }
  return unembed_lorentz(g.matrix() * embed_lorentz(p));
}

// ---------------------------------------------------------------------------
// Boundary action

namespace {

void check_not_infinite(const Isometry& g, const BoundaryPoint& x) {
  const int d = g.dim();
  Vector n(d + 2);
  const double r2 = x.squaredNorm();
  n.head(d) = x;
  n(d) = 0.5 * (1.0 - r2);
  n(d + 1) = 0.5 * (1.0 + r2);
  const Vector image = g.matrix() * n;
  const double sp = image(d) + image(d + 1);
  if (!(sp > 1e-8 * image.norm())) {
    throw GeometryError("boundary_action: point is mapped to (or near) infinity");
  }
}

Vector boundary_limit(const Isometry& g, const BoundaryPoint& x, double z0) {
  const BulkPoint a = apply_isometry(g, BulkPoint(z0, x));
  const BulkPoint b = apply_isometry(g, BulkPoint(0.5 * z0, x));
  // x_g(z, x) is a function of z^2.
  return (4.0 * b.x - a.x) / 3.0;
}

// Distance from x to the boundary point that g sends to infinity, or +inf if
// g fixes infinity.
double pole_distance(const Isometry& g, const BoundaryPoint& x) {
  const int d = g.dim();
  Vector inf = Vector::Zero(d + 2);
  inf(d) = -1.0;
  inf(d + 1) = 1.0;
  const Vector v = g.inverse().matrix() * inf;
  const double sp = v(d) + v(d + 1);
  if (!(sp > 1e-14 * v.norm())) {
    return std::numeric_limits<double>::infinity();
  }
  return (x - v.head(d) / sp).norm();
}

}  // namespace

BoundaryPoint boundary_map_exact(const Isometry& g, const BoundaryPoint& x) {
  check_not_infinite(g, x);
  const int d = g.dim();
  Vector n(d + 2);
  const double r2 = x.squaredNorm();
  n.head(d) = x;
  n(d) = 0.5 * (1.0 - r2);
  n(d + 1) = 0.5 * (1.0 + r2);
  const Vector image = g.matrix() * n;
  return image.head(d) / (image(d) + image(d + 1));
}

double conformal_factor(const Isometry& g, const BoundaryPoint& x) {
  const int d = g.dim();
  if (x.size() != d) {
    throw GeometryError("conformal_factor: dimension mismatch");
  }
  Vector n(d + 2);
  const double r2 = x.squaredNorm();
  n.head(d) = x;
  n(d) = 0.5 * (1.0 - r2);
  n(d + 1) = 0.5 * (1.0 + r2);
  const Vector image = g.matrix() * n;
  return 1.0 / (image(d) + image(d + 1));
}

BoundaryAction boundary_action(const Isometry& g, const BoundaryPoint& x, double z0,
                               double step) {
  const int d = g.dim();
  if (x.size() != d) {
    throw GeometryError("boundary_action: dimension mismatch");
  }
  check_not_infinite(g, x);
  // Near the pole of g the map varies on the scale |x - pole|; both the limit
  // height and the difference step shrink with it.
  const double dist = pole_distance(g, x);
  const double zz = z0 * std::min(1.0, dist);
  BoundaryAction out;
  out.point = boundary_limit(g, x, zz);

  const double h = step * std::min(1.0 + x.norm(), dist);
  Matrix jacobian(d, d);
  for (int j = 0; j < d; ++j) {
    auto central = [&](double hh) {
      Vector xp = x;
      Vector xm = x;
      xp(j) += hh;
      xm(j) -= hh;
      return Vector((boundary_limit(g, xp, zz) - boundary_limit(g, xm, zz)) / (2.0 * hh));
    };
    jacobian.col(j) = (4.0 * central(0.5 * h) - central(h)) / 3.0;
  }
  out.jac = std::abs(jacobian.determinant());
  if (!(out.jac > 0.0) || !std::isfinite(out.jac)) {
    throw GeometryError("boundary_action: degenerate Jacobian");
  }
  return out;
}

}  // namespace adscft
