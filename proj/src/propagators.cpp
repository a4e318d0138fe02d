#include "adscft/propagators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "adscft/specfun.hpp"

namespace adscft {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Sum of quadratures of `f` over [0, kappa_max]: tanh-sinh on the first piece
// (integrable power singularity at 0), then equal segments of length <= seg.
template <class F>
QuadResult radial_k_integral(F&& g, double kappa_0, double kappa_max, double seg, double rel_tol,
                             bool tanh_sinh_everywhere = false) {
  // Below 1e-120 kappa_0 the integrand (at worst ~ kappa^{d - 1 - 2 nu} with
  // 2 nu < d) contributes nothing visible, but the individual factors can
  // overflow.
  const double floor = 1e-120 * kappa_0;
  auto f = [&](double kappa) { return kappa < floor ? 0.0 : g(kappa); };
  QuadResult total = quad::tanh_sinh(f, 0.0, kappa_0, rel_tol);
  const int n = std::clamp(static_cast<int>(std::ceil((kappa_max - kappa_0) / seg)), 4, 20000);
  const double h = (kappa_max - kappa_0) / n;
  for (int i = 0; i < n; ++i) {
    const double lo = kappa_0 + i * h;
    const double hi = kappa_0 + (i + 1) * h;
    total += tanh_sinh_everywhere ? quad::tanh_sinh(f, lo, hi, rel_tol)
                                  : quad::gauss_kronrod(f, lo, hi, rel_tol, 12);
  }
  return total;
}

}  // namespace

double green(const ModelParams& p, KernelSign s, const BulkPoint& a, const BulkPoint& b) {
  const double u = chordal_u(a, b);
  if (!(u > 0.0)) {
    throw DomainError("green: coincident points");
  }
  const double delta = p.delta(s);
  const double hb = delta + 0.5 * (1.0 - p.d);
  const double hc = 2.0 * delta + 1.0 - p.d;
  const EvalResult f = hyp2f1(delta, hb, hc, -2.0 / u);
  return p.gamma(s) * std::pow(2.0 * u, -delta) * f.value;
}

double bulk_to_boundary(const ModelParams& p, KernelSign s, const BulkPoint& a,
                        const BoundaryPoint& xp) {
  const double r = a.z / (a.z * a.z + (a.x - xp).squaredNorm());
  return p.gamma(s) * std::pow(r, p.delta(s));
}

double boundary_kernel(const ModelParams& p, KernelSign s, const BoundaryPoint& x,
                       const BoundaryPoint& y) {
  const double r2 = (x - y).squaredNorm();
  if (!(r2 > 0.0)) {
    throw DomainError("boundary_kernel: coincident points");
  }
  return p.gamma(s) * std::pow(r2, -p.delta(s));
}

double bulk_to_boundary_fourier_radial(const ModelParams& p, KernelSign s, double z,
                                       double kappa) {
  if (!(kappa > 0.0) || !(z > 0.0)) {
    throw DomainError("bulk_to_boundary_fourier: requires |k| > 0 and z > 0");
  }
  const double snu = p.signed_nu(s);
  return std::pow(kTwoPi, -0.5 * p.d) / gamma_fn(1.0 + snu) * std::pow(0.5 * kappa, snu) *
         std::pow(z, 0.5 * p.d) * bessel_k(p.nu, kappa * z).value;
}

std::complex<double> bulk_to_boundary_fourier(const ModelParams& p, KernelSign s,
                                              const BulkPoint& a, const Vector& k) {
  const double radial = bulk_to_boundary_fourier_radial(p, s, a.z, k.norm());
  return radial * std::polar(1.0, -k.dot(a.x));
}

double boundary_kernel_fourier(const ModelParams& p, KernelSign s, double kappa) {
  if (!(kappa > 0.0)) {
    throw DomainError("boundary_kernel_fourier: requires |k| > 0");
  }
  const double snu = p.signed_nu(s);
  const double c_nu = gamma_fn(-snu) / (2.0 * std::pow(kTwoPi, 0.5 * p.d) * gamma_fn(1.0 + snu));
  return c_nu * std::pow(0.5 * kappa, 2.0 * snu);
}

QuadResult boundary_pairing(const ModelParams& p, KernelSign s, const BoundaryFunction& f,
                            const BoundaryFunction& g, double rel_tol) {
  if (f.dim() != p.d || g.dim() != p.d) {
    throw DomainError("boundary_pairing: dimension mismatch");
  }
  if (s == KernelSign::minus) {
    p.require_boundary_measure("boundary_pairing(minus)");
  }
  const double conv = std::pow(kTwoPi, 0.5 * p.d);
  return radial_pairing(
      f, g, [&](double kappa) { return conv * boundary_kernel_fourier(p, s, kappa); }, rel_tol);
}

QuadResult smeared_bulk_to_boundary(const ModelParams& p, KernelSign s, const BulkPoint& a,
                                    const BoundaryFunction& f, double rel_tol) {
  if (f.dim() != p.d || a.dim() != p.d) {
    throw DomainError("smeared_bulk_to_boundary: dimension mismatch");
  }
  if (s == KernelSign::minus) {
    p.require_boundary_measure("smeared_bulk_to_boundary(minus)");
  }
  const int d = p.d;
  // Sphere average of conj(H^(a, k)) f^(k) for |k| = kappa.
  auto integrand = [&](double kappa) {
    if (kappa <= 0.0) {
      return 0.0;
    }
    double sum = 0.0;
    for (const auto& t : f.terms()) {
      sum += t.weight * std::pow(t.width, d) * std::exp(-0.5 * t.width * t.width * kappa * kappa) *
             sphere_phase_average(d, kappa * (a.x - t.center).norm());
    }
    return sum * bulk_to_boundary_fourier_radial(p, s, a.z, kappa) * std::pow(kappa, d - 1);
  };
  const double sigma = f.min_width();
  const double kappa_max = std::min(std::sqrt(70.0) / sigma, 60.0 / a.z);
  const double kappa_0 = std::min(0.25 / f.max_width(), 0.25 / a.z);
  double sep = 0.0;
  for (const auto& t : f.terms()) {
    sep = std::max(sep, (a.x - t.center).norm());
  }
  const double seg = std::min({1.0 / sigma, 1.0 / a.z, sep > 0.0 ? std::numbers::pi / sep : 1e300});
  QuadResult r = radial_k_integral(integrand, kappa_0, kappa_max, seg, rel_tol);
  r.value *= sphere_area(d);
  r.error *= sphere_area(d);
  return r;
}

SplittingCheck splitting_residual(const ModelParams& p, const BulkPoint& a, const BulkPoint& b,
                                  double rel_tol) {
  p.require_boundary_measure("splitting_residual");
  if (a.dim() != p.d || b.dim() != p.d) {
    throw DomainError("splitting_residual: dimension mismatch");
  }
  const int d = p.d;
  const double area = sphere_area(d);
  const double sep = (a.x - b.x).norm();
  const double conv = std::pow(kTwoPi, 0.5 * d);

  // c^2 conj(H_+^(a)) (2 pi)^{d/2} alpha_-^ H_+^(b), sphere averaged.
  auto boundary_integrand = [&](double kappa) {
    if (kappa <= 0.0) {
      return 0.0;
    }
    const double ha = bulk_to_boundary_fourier_radial(p, KernelSign::plus, a.z, kappa);
    const double hb = bulk_to_boundary_fourier_radial(p, KernelSign::plus, b.z, kappa);
    const double alpha = conv * boundary_kernel_fourier(p, KernelSign::minus, kappa);
    return p.c * p.c * ha * alpha * hb * sphere_phase_average(d, kappa * sep) *
           std::pow(kappa, d - 1);
  };
  // c conj(H_+^(a)) H_-^(b), sphere averaged.
  auto intermediate_integrand = [&](double kappa) {
    if (kappa <= 0.0) {
      return 0.0;
    }
    const double ha = bulk_to_boundary_fourier_radial(p, KernelSign::plus, a.z, kappa);
    const double hb = bulk_to_boundary_fourier_radial(p, KernelSign::minus, b.z, kappa);
    return p.c * ha * hb * sphere_phase_average(d, kappa * sep) * std::pow(kappa, d - 1);
  };

  // K_nu(kappa z_a) K_nu(kappa z_b) ~ exp(-kappa (z_a + z_b)).
  const double zs = a.z + b.z;
  const double kappa_max = 50.0 / zs;
  const double kappa_0 = 0.25 / zs;
  const double seg = std::min(1.0 / zs, sep > 0.0 ? std::numbers::pi / sep : 1e300);

  SplittingCheck out;
  out.g_minus = green(p, KernelSign::minus, a, b);
  out.g_plus = green(p, KernelSign::plus, a, b);
  const QuadResult bt = radial_k_integral(boundary_integrand, kappa_0, kappa_max, seg, rel_tol);
  // Independent rule for the intermediate identity.
  const QuadResult it =
      radial_k_integral(intermediate_integrand, kappa_0, kappa_max, seg, rel_tol, true);
  out.boundary_term = area * bt.value;
  out.boundary_error = area * bt.error;
  out.intermediate_term = area * it.value;
  out.intermediate_error = area * it.error;
  out.residual = out.g_minus - out.g_plus - out.boundary_term;
  out.intermediate_residual = out.g_minus - out.g_plus - out.intermediate_term;
  return out;
}

}  // namespace adscft
