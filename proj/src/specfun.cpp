#include "adscft/specfun.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "adscft/quadrature.hpp"

namespace adscft {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEps = std::numeric_limits<double>::epsilon();

bool is_nonpositive_integer(double x) { return x <= 0.0 && x == std::floor(x); }

constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
constexpr double kLanczosG = 7.0;

double lanczos_gamma(double x) {
  // valid for x >= 1/2
  const double xm1 = x - 1.0;
  double acc = kLanczos[0];
  for (std::size_t i = 1; i < kLanczos.size(); ++i) {
    acc += kLanczos[i] / (xm1 + static_cast<double>(i));
  }
  const double t = xm1 + kLanczosG + 0.5;
  // t^(x-1/2) split in two to delay overflow.
  const double half_pow = std::pow(t, 0.5 * (xm1 + 0.5));
  return std::sqrt(2.0 * kPi) * half_pow * (half_pow * std::exp(-t)) * acc;
}

// Coefficients a_k(nu) = prod_{j=1..k} (4nu^2 - (2j-1)^2) / (k! 8^k) of the
// large-argument Bessel expansions.
double hankel_coefficient_ratio(double nu, int k) {
  const double mu = 4.0 * nu * nu;
  const double odd = 2.0 * k - 1.0;
  return (mu - odd * odd) / (8.0 * k);
}

}  // namespace

double gamma_fn(double x) {
  if (is_nonpositive_integer(x)) {
    throw DomainError("gamma_fn: pole at nonpositive integer " + std::to_string(x));
  }
  if (x < 0.5) {
    return kPi / (std::sin(kPi * x) * lanczos_gamma(1.0 - x));
  }
  return lanczos_gamma(x);
}

// ---------------------------------------------------------------------------
// 2F1

namespace {

EvalResult hyp2f1_series(double a, double b, double c, double zeta,
                         long max_terms = 4'000'000) {
  double term = 1.0;
  double sum = 1.0;
  double max_abs = 1.0;
  int quiet = 0;
  for (long n = 0; n < max_terms; ++n) {
    const double dn = static_cast<double>(n);
    term *= (a + dn) * (b + dn) / ((c + dn) * (dn + 1.0)) * zeta;
    sum += term;
    max_abs = std::max(max_abs, std::abs(term));
    if (term == 0.0) {
      return {sum, kEps * max_abs};
    }
    // Past the turning point the terms decay at least geometrically.
    const double ratio = std::abs((a + dn + 1.0) * (b + dn + 1.0) /
                                  ((c + dn + 1.0) * (dn + 2.0)) * zeta);
    if (ratio < 1.0 && std::abs(term) < 1e-17 * std::abs(sum)) {
      if (++quiet >= 3) {
        const double tail = std::abs(term) * ratio / (1.0 - ratio);
        return {sum, tail + 4.0 * kEps * max_abs * std::sqrt(dn + 1.0)};
      }
    } else {
      quiet = 0;
    }
  }
  throw QuadratureError("hyp2f1: series failed to converge at zeta = " +
                        std::to_string(zeta));
}

bool euler_admissible(double b, double c) { return c > b && b > 0.0; }

EvalResult hyp2f1_euler(double a, double b, double c, double zeta) {
  if (!euler_admissible(b, c)) {
    std::swap(a, b);
  }
  if (!euler_admissible(b, c)) {
    throw DomainError("hyp2f1: Euler integral needs c > b > 0 or c > a > 0");
  }
  const double pb = b - 1.0;
  const double pcb = c - b - 1.0;
  auto integrand = [&](double t, double tc) {
    // tc is the signed distance to the nearest endpoint
    const double one_minus_t = (t > 0.5) ? tc : 1.0 - t;
    return std::pow(t, pb) * std::pow(one_minus_t, pcb) *
           std::pow(1.0 - zeta * t, -a);
  };
  const QuadResult q = quad::tanh_sinh(integrand, 0.0, 1.0, 1e-14);
  const double norm = gamma_fn(c) / (gamma_fn(b) * gamma_fn(c - b));
  return {norm * q.value,
          std::abs(norm) * q.error + 8.0 * kEps * std::abs(norm * q.value)};
}

EvalResult hyp2f1_pfaff(double a, double b, double c, double zeta) {
  if (!(zeta < 0.0)) {
    throw DomainError("hyp2f1: Pfaff branch needs zeta < 0");
  }
  const double w = zeta / (zeta - 1.0);
  // Pick the form whose series has the faster algebraic decay.
  if (a <= b) {
    const EvalResult s = hyp2f1_series(a, c - b, c, w);
    const double pref = std::pow(1.0 - zeta, -a);
    return {pref * s.value, pref * s.est_error};
  }
  const EvalResult s = hyp2f1_series(c - a, b, c, w);
  const double pref = std::pow(1.0 - zeta, -b);
  return {pref * s.value, pref * s.est_error};
}

}  // namespace

EvalResult hyp2f1(double a, double b, double c, double zeta, Hyp2f1Method method) {
  if (is_nonpositive_integer(c)) {
    throw DomainError("hyp2f1: c must not be a nonpositive integer");
  }
  if (!(zeta < 1.0)) {
    throw DomainError("hyp2f1: argument must satisfy zeta < 1, got " +
                      std::to_string(zeta));
  }
  if (zeta == 0.0) {
    return {1.0, 0.0};
  }
  switch (method) {
    case Hyp2f1Method::series:
      if (!(std::abs(zeta) < 1.0)) {
        throw DomainError("hyp2f1: series needs |zeta| < 1");
      }
      return hyp2f1_series(a, b, c, zeta);
    case Hyp2f1Method::euler:
      return hyp2f1_euler(a, b, c, zeta);
    case Hyp2f1Method::pfaff_series:
      return hyp2f1_pfaff(a, b, c, zeta);
    case Hyp2f1Method::automatic:
      break;
  }
  if (std::abs(zeta) <= 0.5) {
    return hyp2f1_series(a, b, c, zeta);
  }
  if (euler_admissible(b, c) || euler_admissible(a, c)) {
    return hyp2f1_euler(a, b, c, zeta);
  }
  if (zeta < 0.0) {
    return hyp2f1_pfaff(a, b, c, zeta);
  }
  throw DomainError("hyp2f1: no admissible branch for these parameters at zeta > 1/2");
}

// ---------------------------------------------------------------------------
// K_nu

namespace {

EvalResult bessel_k_asymptotic(double nu, double x) {
  double term = 1.0;
  double sum = 1.0;
  double last = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double next = term * hankel_coefficient_ratio(nu, k) / x;
    if (std::abs(next) >= std::abs(term) && k > 1) {
      break;  // asymptotic series started to diverge
    }
    term = next;
    sum += term;
    last = std::abs(term);
    if (last < 1e-17 * std::abs(sum)) {
      break;
    }
  }
  const double pref = std::sqrt(kPi / (2.0 * x)) * std::exp(-x);
  return {pref * sum, pref * (last + kEps * std::abs(sum))};
}

EvalResult bessel_k_integral(double nu, double x) {
  auto log_integrand = [&](double s) {
    // log(cosh(nu s)) without overflow
    const double ns = nu * s;
    const double log_cosh = ns + std::log1p(std::exp(-2.0 * ns)) - std::log(2.0);
    return -x * std::cosh(s) + log_cosh;
  };
  // Locate the peak of the integrand and a cutoff 45 e-folds below it.
  double peak = log_integrand(0.0);
  double s = 0.0;
  const double step = 0.25;
  while (true) {
    s += step;
    const double g = log_integrand(s);
    peak = std::max(peak, g);
    if (g < peak - 45.0) {
      break;
    }
  }
  const double upper = s;
  // For tiny x the mass sits near s = log(2 nu / x); skip the negligible
  // stretch below it.
  double lower = 0.0;
  while (lower + step < upper && log_integrand(lower + step) < peak - 45.0) {
    lower += step;
  }
  auto integrand = [&](double t) { return std::exp(log_integrand(t) - peak); };
  // The integrand is even in s and decays double exponentially, so the
  // trapezoidal rule converges geometrically; halve the step until two
  // successive sums agree.
  double h = std::min(0.5, 1.0 / std::sqrt(x + 1.0));
  int n = static_cast<int>(std::ceil((upper - lower) / h));
  h = (upper - lower) / n;
  // Half weight at s = 0 (even integrand) or at a cutoff where it is negligible.
  double sum = 0.5 * integrand(lower);
  for (int i = 1; i <= n; ++i) {
    sum += integrand(lower + i * h);
  }
  double cur = sum * h;
  double diff = std::abs(cur);
  for (int level = 0; level < 14; ++level) {
    // Refine by adding the midpoints.
    for (int i = 0; i < n; ++i) {
      sum += integrand(lower + (i + 0.5) * h);
    }
    n *= 2;
    h *= 0.5;
    const double next = sum * h;
    diff = std::abs(next - cur);
    cur = next;
    if (diff <= 2e-15 * cur) {
      break;
    }
  }
  const double scale = std::exp(peak);
  return {scale * cur, scale * (diff + 4.0 * kEps * cur)};
}

}  // namespace

EvalResult bessel_k(double nu, double x, BesselKMethod method) {
  if (!(x > 0.0)) {
    throw DomainError("bessel_k: argument must be positive");
  }
  nu = std::abs(nu);  // K_{-nu} = K_nu
  switch (method) {
    case BesselKMethod::integral:
      return bessel_k_integral(nu, x);
    case BesselKMethod::asymptotic:
      return bessel_k_asymptotic(nu, x);
    case BesselKMethod::automatic:
      break;
  }
  if (x > 30.0) {
    const EvalResult r = bessel_k_asymptotic(nu, x);
    if (r.est_error <= 1e-14 * r.value) {
      return r;
    }
  }
  return bessel_k_integral(nu, x);
}

// ---------------------------------------------------------------------------
// J_nu

namespace {

using Quad = boost::multiprecision::cpp_bin_float_quad;

EvalResult bessel_j_series(double nu, double u) {
  if (u == 0.0) {
    if (nu == 0.0) return {1.0, 0.0};
    if (nu > 0.0) return {0.0, 0.0};
    throw DomainError("bessel_j: J_nu(0) is infinite for nu < 0");
  }
  const Quad half_u = Quad(u) / 2;
  const Quad q = -half_u * half_u;
  // First term (u/2)^nu / Gamma(nu+1) in double: it is an overall factor.
  const double lead = std::pow(0.5 * u, nu) / gamma_fn(nu + 1.0);
  Quad term = 1;
  Quad sum = 1;
  Quad max_term = 1;
  for (int k = 1; k < 2000; ++k) {
    term *= q / (Quad(k) * (Quad(k) + Quad(nu)));
    sum += term;
    max_term = std::max(max_term, abs(term));
    if (k > u && abs(term) < Quad(1e-24) * abs(sum)) {
      break;
    }
  }
  const double s = static_cast<double>(sum);
  const double cancellation = static_cast<double>(max_term) * 1e-32;
  return {lead * s, std::abs(lead) * (2.0 * kEps * std::abs(s) + cancellation)};
}

EvalResult bessel_j_poisson(double nu, double u) {
  if (u == 0.0) {
    return bessel_j_series(nu, u);
  }
  const double p = nu - 0.5;
  auto integrand = [&](double t, double tc) {
    const double one_minus_t = (t > 0.5) ? tc : 1.0 - t;
    return std::pow(one_minus_t * (1.0 + t), p) * std::cos(u * t);
  };
  const QuadResult q = quad::tanh_sinh(integrand, 0.0, 1.0, 1e-14);
  const double pref =
      std::pow(2.0, 1.0 - nu) / (std::sqrt(kPi) * gamma_fn(nu + 0.5)) * std::pow(u, nu);
  return {pref * q.value, std::abs(pref) * q.error + 4.0 * kEps * std::abs(pref * q.value)};
}

EvalResult bessel_j_asymptotic(double nu, double u) {
  const HankelPQ h = hankel_pq(nu, u);
  const double chi = u - 0.5 * nu * kPi - 0.25 * kPi;
  const double amp = std::sqrt(2.0 / (kPi * u));
  const double value = amp * (h.p * std::cos(chi) - h.q * std::sin(chi));
  return {value,
          amp * (h.error + 4.0 * kEps * (std::abs(h.p) + std::abs(h.q)) * (1.0 + u * kEps))};
}

}  // namespace

HankelPQ hankel_pq(double nu, double u) {
  // P - i Q = sum_k (i)^k a_k / u^k, truncated at the smallest term.
  HankelPQ h;
  double term = 1.0;
  for (int k = 1; k < 80; ++k) {
    const double next = term * hankel_coefficient_ratio(nu, k) / u;
    if (std::abs(next) >= std::abs(term)) {
      break;
    }
    term = next;
    h.error = std::abs(term);
    switch (k % 4) {
      case 1: h.q += term; break;
      case 2: h.p -= term; break;
      case 3: h.q -= term; break;
      case 0: h.p += term; break;
    }
    if (h.error < 1e-18) {
      break;
    }
  }
  return h;
}

EvalResult bessel_j(double nu, double u, BesselJMethod method) {
  if (!(nu > -0.5)) {
    throw DomainError("bessel_j: order must satisfy nu > -1/2");
  }
  if (u < 0.0) {
    throw DomainError("bessel_j: argument must be nonnegative");
  }
  switch (method) {
    case BesselJMethod::series:
      return bessel_j_series(nu, u);
    case BesselJMethod::poisson:
      return bessel_j_poisson(nu, u);
    case BesselJMethod::asymptotic:
      return bessel_j_asymptotic(nu, u);
    case BesselJMethod::automatic:
      break;
  }
  if (u <= 40.0) {
    return bessel_j_series(nu, u);
  }
  const EvalResult r = bessel_j_asymptotic(nu, u);
  if (r.est_error <= 1e-14) {
    return r;
  }
  if (u <= 70.0) {
    return bessel_j_series(nu, u);
  }
  return bessel_j_poisson(nu, u);
}

// ---------------------------------------------------------------------------
// I_nu and I_nu K_nu

namespace {

// sum_k (-1)^k a_k / x^k and sum_k a_k / x^k, truncated at the smallest term
std::pair<double, double> hankel_sums(double nu, double x, double& last) {
  double alt = 1.0;
  double pos = 1.0;
  double term = 1.0;
  last = 0.0;
  for (int k = 1; k < 80; ++k) {
    const double next = term * hankel_coefficient_ratio(nu, k) / x;
    if (std::abs(next) >= std::abs(term)) {
      break;
    }
    term = next;
    last = std::abs(term);
    pos += term;
    alt += (k % 2 == 0) ? term : -term;
    if (last < 1e-18) {
      break;
    }
  }
  return {alt, pos};
}

}  // namespace

EvalResult bessel_i(double nu, double x) {
  if (x < 0.0 || nu < 0.0) {
    throw DomainError("bessel_i: needs nu >= 0 and x >= 0");
  }
  if (x == 0.0) {
    return {nu == 0.0 ? 1.0 : 0.0, 0.0};
  }
  if (x > 40.0) {
    double last = 0.0;
    const auto [alt, pos] = hankel_sums(nu, x, last);
    (void)pos;
    const double pref = std::exp(x) / std::sqrt(2.0 * kPi * x);
    if (last < 1e-15) {
      return {pref * alt, pref * (last + 4.0 * kEps)};
    }
  }
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 1000; ++k) {
    term *= q / (k * (k + nu));
    sum += term;
    if (term < 1e-18 * sum) {
      break;
    }
  }
  const double lead = std::pow(0.5 * x, nu) / gamma_fn(nu + 1.0);
  return {lead * sum, 8.0 * kEps * lead * sum};
}

EvalResult bessel_ik_product(double nu, double x) {
  if (!(x > 0.0)) {
    throw DomainError("bessel_ik_product: argument must be positive");
  }
  nu = std::abs(nu);
  if (x > 30.0) {
    double last = 0.0;
    const auto [alt, pos] = hankel_sums(nu, x, last);
    if (last < 1e-15) {
      // e^{x} and e^{-x} cancel analytically.
      const double v = alt * pos / (2.0 * x);
      return {v, (last * (std::abs(alt) + std::abs(pos)) + 4.0 * kEps * std::abs(alt * pos)) /
                     (2.0 * x)};
    }
  }
  const EvalResult i = bessel_i(nu, x);
  const EvalResult k = bessel_k(nu, x);
  return {i.value * k.value, std::abs(i.value) * k.est_error + std::abs(k.value) * i.est_error};
}

}  // namespace adscft
