#include "adscft/boundary_function.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "adscft/specfun.hpp"

namespace adscft {

BoundaryFunction::BoundaryFunction(std::vector<GaussianBump> terms) : terms_(std::move(terms)) {
  if (terms_.empty()) {
    throw DomainError("BoundaryFunction: at least one term required");
  }
  const auto d = terms_.front().center.size();
  if (d == 0) {
    throw DomainError("BoundaryFunction: empty center");
  }
  for (const auto& t : terms_) {
    if (t.center.size() != d) {
      throw DomainError("BoundaryFunction: inconsistent center dimensions");
    }
    if (!(t.width > 0.0)) {
      throw DomainError("BoundaryFunction: widths must be positive");
    }
  }
}

BoundaryFunction BoundaryFunction::bump(const Vector& center, double width, double weight) {
  return BoundaryFunction({GaussianBump{center, width, weight}});
}

BoundaryFunction BoundaryFunction::random(int d, int n, std::mt19937_64& rng, double spread,
                                          double w_lo, double w_hi, bool positive,
                                          const Vector& offset) {
  std::normal_distribution<double> gauss(0.0, spread);
  std::uniform_real_distribution<double> width(w_lo, w_hi);
  std::uniform_real_distribution<double> weight(positive ? 0.2 : -1.0, 1.0);
  std::vector<GaussianBump> terms;
  for (int i = 0; i < n; ++i) {
    Vector c(d);
    for (int j = 0; j < d; ++j) {
      c(j) = gauss(rng) + (offset.size() == d ? offset(j) : 0.0);
    }
    const double w = width(rng);
    terms.push_back({c, w, weight(rng)});
  }
  return BoundaryFunction(std::move(terms));
}

double BoundaryFunction::value(const Vector& x) const {
  double s = 0.0;
  for (const auto& t : terms_) {
    s += t.weight * std::exp(-(x - t.center).squaredNorm() / (2.0 * t.width * t.width));
  }
  return s;
}

std::complex<double> BoundaryFunction::fourier(const Vector& k) const {
  const int d = dim();
  std::complex<double> s = 0.0;
  for (const auto& t : terms_) {
    const double amp =
        t.weight * std::pow(t.width, d) * std::exp(-0.5 * t.width * t.width * k.squaredNorm());
    s += amp * std::polar(1.0, -k.dot(t.center));
  }
  return s;
}

double BoundaryFunction::cross_spectrum(const BoundaryFunction& g, double kappa) const {
  const int d = dim();
  if (g.dim() != d) {
    throw DomainError("BoundaryFunction: dimension mismatch");
  }
  double s = 0.0;
  for (const auto& a : terms_) {
    for (const auto& b : g.terms_) {
      const double amp = a.weight * b.weight * std::pow(a.width * b.width, d) *
                         std::exp(-0.5 * (a.width * a.width + b.width * b.width) * kappa * kappa);
      if (amp == 0.0) {
        continue;
      }
      s += amp * sphere_phase_average(d, kappa * (a.center - b.center).norm());
    }
  }
  return s;
}

BoundaryFunction BoundaryFunction::reflected(int axis) const {
  if (axis < 0 || axis >= dim()) {
    throw DomainError("BoundaryFunction::reflected: bad axis");
  }
  auto terms = terms_;
  for (auto& t : terms) {
    t.center(axis) = -t.center(axis);
  }
  return BoundaryFunction(std::move(terms));
}

BoundaryFunction BoundaryFunction::scaled(double s) const {
  auto terms = terms_;
  for (auto& t : terms) {
    t.weight *= s;
  }
  return BoundaryFunction(std::move(terms));
}

BoundaryFunction BoundaryFunction::shifted(const Vector& a) const {
  auto terms = terms_;
  for (auto& t : terms) {
    t.center += a;
  }
  return BoundaryFunction(std::move(terms));
}

BoundaryFunction BoundaryFunction::operator+(const BoundaryFunction& other) const {
  if (other.dim() != dim()) {
    throw DomainError("BoundaryFunction: dimension mismatch");
  }
  auto terms = terms_;
  terms.insert(terms.end(), other.terms_.begin(), other.terms_.end());
  return BoundaryFunction(std::move(terms));
}

double BoundaryFunction::halfspace_mass(int axis, int sign) const {
  const int d = dim();
  double inside = 0.0;
  double total = 0.0;
  for (const auto& t : terms_) {
    const double m = std::abs(t.weight) * std::pow(t.width, d);
    const double arg = sign * t.center(axis) / (t.width * std::numbers::sqrt2);
    inside += m * 0.5 * std::erfc(-arg);
    total += m;
  }
  return inside / total;
}

double BoundaryFunction::min_width() const {
  double w = terms_.front().width;
  for (const auto& t : terms_) {
    w = std::min(w, t.width);
  }
  return w;
}

double BoundaryFunction::max_width() const {
  double w = terms_.front().width;
  for (const auto& t : terms_) {
    w = std::max(w, t.width);
  }
  return w;
}

double BoundaryFunction::max_separation(const BoundaryFunction& g) const {
  double s = 0.0;
  for (const auto& a : terms_) {
    for (const auto& b : g.terms_) {
      s = std::max(s, (a.center - b.center).norm());
    }
  }
  return s;
}

double sphere_area(int d) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / gamma_fn(0.5 * d);
}

double sphere_phase_average(int d, double s) {
  if (s == 0.0) {
    return 1.0;
  }
  switch (d) {
    case 1:
      return std::cos(s);
    case 3:
      return std::sin(s) / s;
    default: {
      const double order = 0.5 * d - 1.0;
      if (s < 1e-6) {
        return 1.0 - s * s / (2.0 * d);
      }
      return gamma_fn(0.5 * d) * std::pow(2.0 / s, order) * bessel_j(order, s).value;
    }
  }
}

QuadResult radial_pairing(const BoundaryFunction& f, const BoundaryFunction& g,
                          const std::function<double(double)>& m, double rel_tol,
                          const std::vector<double>& knots) {
  const int d = f.dim();
  const double area = sphere_area(d);
  // Gaussian decay: exp(-sigma_min^2 kappa^2) below 1e-30 past kappa_max.
  const double sigma = std::min(f.min_width(), g.min_width());
  const double kappa_max = std::sqrt(70.0) / sigma;
  double kappa_0 = 0.25 / std::max(f.max_width(), g.max_width());
  for (double k : knots) {
    if (k > 0.0) {
      kappa_0 = std::min(kappa_0, k);
    }
  }
  // Singular multipliers can overflow long before their integrable
  // contribution becomes visible.
  const double floor = 1e-120 * kappa_0;
  auto integrand = [&](double kappa) {
    if (kappa < floor) {
      return 0.0;
    }
    return f.cross_spectrum(g, kappa) * m(kappa) * std::pow(kappa, d - 1);
  };

  QuadResult total = quad::tanh_sinh(integrand, 0.0, kappa_0, rel_tol);
  // Oscillation period of the phase factor sets the segment length.
  const double sep = f.max_separation(g);
  const double seg = std::min(1.0 / sigma, sep > 0.0 ? std::numbers::pi / sep : 1e300);
  const int n = std::clamp(static_cast<int>(std::ceil((kappa_max - kappa_0) / seg)), 4, 4000);
  const double h = (kappa_max - kappa_0) / n;
  std::vector<double> breaks;
  for (int i = 0; i <= n; ++i) {
    breaks.push_back(kappa_0 + i * h);
  }
  for (double k : knots) {
    if (k > kappa_0 && k < kappa_max) {
      breaks.push_back(k);
    }
  }
  std::sort(breaks.begin(), breaks.end());
  total += quad::gauss_kronrod_piecewise(integrand, breaks, rel_tol, 12);
  total.value *= area;
  total.error *= area;
  return total;
}

double spectral_moment(const BoundaryFunction& f, double j) {
  const int d = f.dim();
  if (f.terms().size() == 1) {
    const auto& t = f.terms().front();
    // |f^|^2 = w^2 sigma^{2d} exp(-sigma^2 k^2), radial Gamma integral.
    return t.weight * t.weight * std::pow(t.width, 2 * d) * sphere_area(d) *
           gamma_fn(j + 0.5 * d) / (2.0 * std::pow(t.width, 2.0 * j + d));
  }
  return radial_pairing(f, f, [j](double k) { return std::pow(k, 2.0 * j); }).value;
}

}  // namespace adscft
