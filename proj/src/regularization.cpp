#include "adscft/regularization.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>

#include "adscft/propagators.hpp"
#include "adscft/specfun.hpp"

namespace adscft {

namespace {

constexpr double kPi = std::numbers::pi;

void require_corr_nu(double nu) {
  if (!(nu > 0.0) || std::abs(nu - std::round(nu)) < 1e-12) {
    throw DomainError("regularization: integer nu excluded (nu = " + std::to_string(nu) + ")");
  }
  if (nu > kMaxCorrNu) {
    throw DomainError("regularization: nu > 2.5 needs more than three counterterms");
  }
}

// Fixed composite Gauss-Legendre rule for the k-integral of a radial
// spectrum: geometric panels near 0, then panels of length <= seg.
struct RadialRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

RadialRule radial_rule(const BoundaryFunction& f) {
  using GL = boost::math::quadrature::gauss<double, 30>;
  const double sigma = f.min_width();
  const double kappa_max = std::sqrt(70.0) / sigma;
  const double kappa_0 = 0.25 / f.max_width();
  const double sep = f.max_separation(f);
  const double seg = std::min(0.5 / sigma, sep > 0.0 ? kPi / sep : 1e300);

  std::vector<double> breaks = {0.0};
  for (double b = 1e-9 * kappa_0; b < kappa_0; b *= 10.0) {
    breaks.push_back(b);
  }
  const int n = std::max(4, static_cast<int>(std::ceil((kappa_max - kappa_0) / seg)));
  for (int i = 0; i <= n; ++i) {
    breaks.push_back(kappa_0 + (kappa_max - kappa_0) * i / n);
  }
  RadialRule rule;
  const auto& x = GL::abscissa();
  const auto& w = GL::weights();
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const double mid = 0.5 * (breaks[p] + breaks[p + 1]);
    const double half = 0.5 * (breaks[p + 1] - breaks[p]);
    for (std::size_t i = 0; i < x.size(); ++i) {
      // Boost stores the non-negative half of a symmetric rule.
      const double wi = w[i] * half;
      rule.nodes.push_back(mid + half * x[i]);
      rule.weights.push_back(wi);
      if (x[i] != 0.0) {
        rule.nodes.push_back(mid - half * x[i]);
        rule.weights.push_back(wi);
      }
    }
  }
  return rule;
}

}  // namespace

CutoffSpec::CutoffSpec(int n_) : n(n_) {
  if (n < 1) {
    throw DomainError("CutoffSpec: n must be >= 1");
  }
}

double cutoff_chi(double nu, const CutoffSpec& spec, double kappa) {
  const double n = spec.n;
  if (kappa <= 1.0 / n) {
    return std::pow(n, 2.0 * nu);
  }
  if (kappa <= n) {
    return std::pow(kappa, -2.0 * nu);
  }
  return std::pow(n, -2.0 * nu);
}

double cutoff_multiplier(const ModelParams& p, const CutoffSpec& spec, double kappa) {
  const double c_nu = gamma_fn(p.nu) / (2.0 * std::pow(2.0 * kPi, 0.5 * p.d) * gamma_fn(1.0 - p.nu));
  return std::pow(2.0 * kPi, 0.5 * p.d) * c_nu * std::pow(2.0, 2.0 * p.nu) *
         cutoff_chi(p.nu, spec, kappa);
}

double inverse_cutoff_multiplier(const ModelParams& p, const CutoffSpec& spec, double kappa) {
  return 1.0 / cutoff_multiplier(p, spec, kappa);
}

QuadResult cutoff_pairing(const ModelParams& p, const CutoffSpec& spec, const BoundaryFunction& f,
                          const BoundaryFunction& g, double rel_tol) {
  const std::vector<double> knots = {1.0 / spec.n, static_cast<double>(spec.n)};
  return radial_pairing(
      f, g, [&](double k) { return cutoff_multiplier(p, spec, k); }, rel_tol, knots);
}

QuadResult inverse_cutoff_pairing(const ModelParams& p, const CutoffSpec& spec,
                                  const BoundaryFunction& f, const BoundaryFunction& g,
                                  double rel_tol) {
  const std::vector<double> knots = {1.0 / spec.n, static_cast<double>(spec.n)};
  return radial_pairing(
      f, g, [&](double k) { return inverse_cutoff_multiplier(p, spec, k); }, rel_tol, knots);
}

double poisson_prefactor(double nu) {
  return std::pow(2.0, 1.0 - nu) / (std::sqrt(kPi) * gamma_fn(nu + 0.5));
}

double poisson_profile(double nu, double u) {
  const double a = poisson_prefactor(nu);
  if (u < 1e-7) {
    // P(0) = int_0^1 (1-t^2)^{nu-1/2} dt, with the u^2 term of the series.
    const double p0 = 1.0 / (a * std::pow(2.0, nu) * gamma_fn(nu + 1.0));
    return p0 * (1.0 - u * u / (4.0 * (nu + 1.0)));
  }
  return bessel_j(nu, u).value / (a * std::pow(u, nu));
}

CorrCoefficients corr_coefficients(double nu, double cutoff) {
  require_corr_nu(nu);
  if (!(cutoff >= 30.0)) {
    throw DomainError("corr_coefficients: cutoff must be >= 30 for the Hankel tail");
  }
  const double a2 = std::pow(poisson_prefactor(nu), 2);
  const int top = static_cast<int>(std::floor(nu));
  CorrCoefficients out;
  out.nu = nu;
  for (int j = 0; j <= top; ++j) {
    const double e = 2.0 * (nu - j);
    // w^{e-1} P(w)^2; the power singularity at 0 goes to tanh-sinh.
    auto body = [&](double w) {
      if (w <= 0.0) {
        return 0.0;
      }
      const double pr = poisson_profile(nu, w);
      return std::pow(w, e - 1.0) * pr * pr;
    };
    QuadResult inner = quad::tanh_sinh(body, 0.0, 1.0, 1e-13);
    const int segments = static_cast<int>(std::ceil((cutoff - 1.0) / (0.5 * kPi)));
    for (int i = 0; i < segments; ++i) {
      const double lo = 1.0 + (cutoff - 1.0) * i / segments;
      const double hi = 1.0 + (cutoff - 1.0) * (i + 1) / segments;
      inner += quad::gauss_kronrod(body, lo, hi, 1e-13, 10);
    }

    // Tail: w^{e-1} P^2 = A^{-2} w^{-2j-1} J_nu^2 and
    // J_nu^2 = (1/(pi w)) [(P^2+Q^2) + (P^2-Q^2) sin(2w - nu pi) + 2PQ cos(2w - nu pi)].
    const double power = -2.0 * j - 2.0;
    auto smooth = [&](double w) {
      const HankelPQ h = hankel_pq(nu, w);
      return std::pow(w, power) * (h.p * h.p + h.q * h.q) / kPi;
    };
    auto g_sin = [&](double t) {
      const double w = cutoff + t;
      const HankelPQ h = hankel_pq(nu, w);
      return std::pow(w, power) * (h.p * h.p - h.q * h.q) / kPi;
    };
    auto g_cos = [&](double t) {
      const double w = cutoff + t;
      const HankelPQ h = hankel_pq(nu, w);
      return std::pow(w, power) * 2.0 * h.p * h.q / kPi;
    };
    const QuadResult smooth_tail = quad::exp_sinh(smooth, cutoff, 1e-13);
    static boost::math::quadrature::ooura_fourier_sin<double> osin;
    static boost::math::quadrature::ooura_fourier_cos<double> ocos;
    const double phi = 2.0 * cutoff - nu * kPi;
    const double s1 = osin.integrate(g_sin, 2.0).first;
    const double c1 = ocos.integrate(g_sin, 2.0).first;
    const double s2 = osin.integrate(g_cos, 2.0).first;
    const double c2 = ocos.integrate(g_cos, 2.0).first;
    // sin(2t + phi) = sin 2t cos phi + cos 2t sin phi, cos(2t + phi) = cos 2t cos phi - sin 2t sin phi.
    const double osc = std::cos(phi) * s1 + std::sin(phi) * c1 + std::cos(phi) * c2 -
                       std::sin(phi) * s2;
    const double value = inner.value + (smooth_tail.value + osc) / a2;
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw QuadratureError("corr_coefficients: a_" + std::to_string(j) +
                            " not positive and finite (value " + std::to_string(value) +
                            ", quadrature error " + std::to_string(inner.error) + ")");
    }
    out.a.push_back(value);
  }
  return out;
}

double corr_term(const ModelParams& p, const CorrCoefficients& coeffs, double z,
                 const BoundaryFunction& f) {
  if (!(z > 0.0)) {
    throw DomainError("corr_term: z must be positive");
  }
  if (std::abs(coeffs.nu - p.nu) > 1e-14) {
    throw DomainError("corr_term: coefficients computed for a different nu");
  }
  const double a2 = std::pow(poisson_prefactor(p.nu), 2);
  double sum = 0.0;
  for (std::size_t j = 0; j < coeffs.a.size(); ++j) {
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    sum += sign * std::pow(z, -2.0 * (p.nu - j)) * coeffs.a[j] *
           spectral_moment(f, static_cast<double>(j));
  }
  return a2 * sum;
}

double raw_scaled_pairing(const ModelParams& p, double z, const BoundaryFunction& f) {
  if (!(z > 0.0)) {
    throw DomainError("raw_scaled_pairing: z must be positive");
  }
  const QuadResult r = radial_pairing(
      f, f, [&](double k) { return bessel_ik_product(p.nu, k * z).value; }, 1e-12);
  return std::pow(z, -2.0 * p.nu) * r.value;
}

double corrected_scaled_pairing(const ModelParams& p, double z, const BoundaryFunction& f) {
  require_corr_nu(p.nu);
  if (!(z > 0.0)) {
    throw DomainError("corrected_scaled_pairing: z must be positive");
  }
  const double nu = p.nu;
  const int top = static_cast<int>(std::floor(nu));
  const double e = 2.0 * (nu - top);
  const double a2 = std::pow(poisson_prefactor(nu), 2);

  // Spectrum |f^|^2 k^{2N+2} on a fixed rule; Q_N(w) is then a cheap sum.
  const RadialRule rule = radial_rule(f);
  const double area = sphere_area(p.d);
  std::vector<double> rho(rule.nodes.size());
  double moment = 0.0;  // int |f^|^2 k^{2N+2} dk
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double k = rule.nodes[i];
    rho[i] = rule.weights[i] * area * f.cross_spectrum(f, k) * std::pow(k, p.d - 1 + 2 * top + 2);
    moment += rho[i];
  }
  auto q_n = [&](double w) {
    double s = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
      s += rho[i] / (w * w + rule.nodes[i] * rule.nodes[i]);
    }
    return s;
  };
  auto outer = [&](double w) {
    const double pr = poisson_profile(nu, z * w);
    return std::pow(w, e - 1.0) * pr * pr * q_n(w);
  };

  // [0, w1] after w = s^{1/e}, which removes the w^{e-1} singularity.
  const double w1 = std::min(1.0, 1.0 / z);
  auto substituted = [&](double s) {
    if (s <= 0.0) {
      const double p0 = poisson_profile(nu, 0.0);
      return p0 * p0 * q_n(0.0) / e;
    }
    const double w = std::pow(s, 1.0 / e);
    const double pr = poisson_profile(nu, z * w);
    return pr * pr * q_n(w) / e;
  };
  QuadResult total = quad::gauss_kronrod(substituted, 0.0, std::pow(w1, e), 1e-12, 15);

  // [w1, 2/z] on doubling segments, then period-length segments of P^2 up to
  // omega_max, past which the non-oscillating tail is added in closed form.
  const double omega_max = 400.0 / z;
  std::vector<double> breaks = {w1};
  while (breaks.back() < 2.0 / z) {
    breaks.push_back(std::min(2.0 * breaks.back(), 2.0 / z));
  }
  const double period = kPi / z;
  const int n = static_cast<int>(std::ceil((omega_max - breaks.back()) / period));
  const double start = breaks.back();
  for (int i = 1; i <= n; ++i) {
    breaks.push_back(start + (omega_max - start) * i / n);
  }
  total += quad::gauss_kronrod_piecewise(outer, breaks, 1e-12, 10);

  // w >= omega_max: P(u)^2 ~ A^{-2} u^{-2nu-1} / pi (cycle average) and Q_N ~ moment / w^2.
  const double tail = moment / (kPi * a2) * std::pow(z, -2.0 * nu - 1.0) *
                      std::pow(omega_max, e - 3.0 - 2.0 * nu) / (3.0 + 2.0 * nu - e);
  const double remainder = total.value + tail;
  const double sign = ((top + 1) % 2 == 0) ? 1.0 : -1.0;
  return a2 * sign * remainder;
}

double alpha_plus_closed_form(const ModelParams& p, const BoundaryFunction& f) {
  const double pre = -kPi / (2.0 * std::sin(p.nu * kPi)) *
                     std::pow(std::pow(2.0, p.nu) * gamma_fn(p.nu + 1.0), -2.0);
  return pre * spectral_moment(f, p.nu);
}

std::vector<double> default_z_sequence() { return {1e-1, 3e-2, 1e-2, 3e-3, 1e-3}; }

RegularizedLimit regularized_limit_check(const ModelParams& p, const BoundaryFunction& f,
                                         const std::vector<double>& zs) {
  require_corr_nu(p.nu);
  if (zs.empty()) {
    throw DomainError("regularized_limit_check: empty z-sequence");
  }
  for (std::size_t i = 1; i < zs.size(); ++i) {
    if (!(zs[i] < zs[i - 1])) {
      throw DomainError("regularized_limit_check: z-sequence must decrease");
    }
  }
  const CorrCoefficients coeffs = corr_coefficients(p.nu);
  RegularizedLimit out;
  for (double z : zs) {
    RegularizedRow row;
    row.z = z;
    row.raw = raw_scaled_pairing(p, z, f);
    row.corr = corr_term(p, coeffs, z, f);
    row.corrected = corrected_scaled_pairing(p, z, f);
    out.rows.push_back(row);
  }
  out.limit = boundary_pairing(p, KernelSign::plus, f, f).value;
  out.limit_gap = std::abs(out.rows.back().corrected - out.limit);
  out.relative_gap = out.limit_gap / std::abs(out.limit);

  // Fit over the last decade only: at larger z the finite part still bends
  // the curve away from the asymptotic power.
  const double z_fit = 10.0 * zs.back();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, m = 0.0;
  for (const auto& r : out.rows) {
    if (r.z <= z_fit * (1.0 + 1e-12)) {
      const double x = std::log(r.z);
      const double y = std::log(std::abs(r.raw));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      m += 1.0;
    }
  }
  if (m >= 2.0) {
    out.raw_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  return out;
}

}  // namespace adscft
