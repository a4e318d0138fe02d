#include "adscft/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include "adscft/parallel.hpp"

namespace adscft {

namespace {

constexpr double kPi = std::numbers::pi;
using GL = boost::math::quadrature::gauss<double, 20>;

// Sum of 20-point Gauss-Legendre rules over `panels` equal panels of [a, b].
template <class F>
double gl_panels(F&& f, double a, double b, int panels) {
  const double width = (b - a) / panels;
  double total = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double lo = a + i * width;
    total += GL::integrate(f, lo, lo + width);
  }
  return total;
}

// A^{-1/2} cos(lambda log A), the real part of A^{i lambda - 1/2}.
double kernel(double lambda, double A) { return std::cos(lambda * std::log(A)) / std::sqrt(A); }

// r-panel count for the transform: resolve both the spline and the
// oscillation of phi_lambda.
int transform_panels(double radius, double lambda) {
  const double width = std::min(0.25, 1.5 / (std::abs(lambda) + 1.0));
  return std::max(4, static_cast<int>(std::ceil(radius / width)));
}

}  // namespace

struct RadialFunction::Spline {
  boost::math::interpolators::cardinal_cubic_b_spline<double> s;
};

RadialFunction::RadialFunction(std::vector<double> samples, double radius)
    : samples_(std::move(samples)), radius_(radius) {
  if (samples_.size() < 4) {
    throw DomainError("RadialFunction: need at least 4 samples");
  }
  if (!(radius > 0.0)) {
    throw DomainError("RadialFunction: radius must be positive");
  }
  const double h = radius_ / static_cast<double>(samples_.size() - 1);
  spline_ = std::make_shared<const Spline>(
      Spline{boost::math::interpolators::cardinal_cubic_b_spline<double>(
          samples_.data(), samples_.size(), 0.0, h, 0.0)});
}

RadialFunction RadialFunction::sample(const std::function<double(double)>& f, double radius,
                                      std::size_t n) {
  if (n < 4) {
    throw DomainError("RadialFunction::sample: need at least 4 samples");
  }
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = f(radius * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return RadialFunction(std::move(v), radius);
}

double RadialFunction::operator()(double r) const {
  if (r < 0.0) {
    throw DomainError("RadialFunction: negative radius");
  }
  if (r > radius_) {
    return 0.0;
  }
  return spline_->s(r);
}

double spherical_function(double lambda, double r) {
  if (r < 0.0) {
    throw DomainError("spherical_function: need r >= 0");
  }
  if (r == 0.0) {
    return 1.0;
  }
  const double em = std::exp(-r);
  const double ep = std::exp(r);
  const double sh = std::sinh(r);
  // The integrand is even in u. On |u| <= 1, A = e^r - sinh r 2u^2/(1+u^2).
  auto inner = [&](double u) {
    const double q = 1.0 + u * u;
    return kernel(lambda, ep - sh * 2.0 * u * u / q) / q;
  };
  const QuadResult a = quad::tanh_sinh(inner, 0.0, 1.0, 1e-12);
  // Tail |u| >= 1, u = 1/t: A = e^{-r} + sinh r 2t^2/(1+t^2) rises from e^{-r}
  // to cosh r and log A sweeps an interval of length L = r + log cosh r.
  // Integrating in y = log A = -r + L s^2 makes the oscillation uniform and
  // removes the t^{-1} Jacobian at s = 0:
  //   dt / (1+t^2) A^{-1/2} = e^{y/2} (1+t^2) / (4 sinh r t) dy.
  const double L = r + std::log(std::cosh(r));
  auto outer = [&](double s) {
    if (s == 0.0) {
      // t ~ s sqrt(L e^{-r} / (2 sinh r)) as s -> 0.
      return std::cos(lambda * r) * 2.0 * L * std::exp(-0.5 * r) /
             (4.0 * sh * std::sqrt(L * em / (2.0 * sh)));
    }
    const double y = -r + L * s * s;
    const double q = em * std::expm1(L * s * s) / sh;
    const double t = std::sqrt(q / (2.0 - q));
    return std::cos(lambda * y) * std::exp(0.5 * y) * (1.0 + t * t) / (4.0 * sh * t) * 2.0 * L * s;
  };
  const int panels = 1 + static_cast<int>(std::abs(lambda) * L / 8.0);
  std::vector<double> breaks;
  for (int i = 0; i <= panels; ++i) {
    breaks.push_back(static_cast<double>(i) / panels);
  }
  const QuadResult b = quad::gauss_kronrod_piecewise(outer, breaks, 1e-12, 10);
  const double err = a.error + b.error;
  if (!(err <= 1e-9)) {
    throw QuadratureError("spherical_function: error estimate " + std::to_string(err) +
                          " at lambda = " + std::to_string(lambda) + ", r = " + std::to_string(r));
  }
  return 2.0 / kPi * (a.value + b.value);
}

double spherical_function_theta(double lambda, double r) {
  if (r < 0.0) {
    throw DomainError("spherical_function_theta: need r >= 0");
  }
  const double em = std::exp(-r);
  const double sh = std::sinh(r);
  auto g = [&](double th) {
    const double s = std::sin(0.5 * th);
    return kernel(lambda, em + 2.0 * sh * s * s);
  };
  // The integrand peaks at theta = 0 with width ~ e^{-r/2}; breaks double
  // outward from there.
  std::vector<double> breaks = {0.0};
  for (double t = std::sqrt(em); t < kPi; t *= 2.0) {
    breaks.push_back(t);
  }
  breaks.push_back(kPi);
  return quad::gauss_kronrod_piecewise(g, breaks, 1e-13, 12).value / kPi;
}

double plancherel_density(double lambda) {
  return lambda * std::tanh(kPi * lambda) / (2.0 * kPi);
}

double spherical_transform(const RadialFunction& f, double lambda) {
  auto g = [&](double r) { return f(r) * spherical_function(lambda, r) * std::sinh(r); };
  return 2.0 * kPi * gl_panels(g, 0.0, f.radius(), transform_panels(f.radius(), lambda));
}

std::vector<double> spherical_transform(const RadialFunction& f, const std::vector<double>& lambdas,
                                        int workers) {
  std::vector<double> out(lambdas.size());
  parallel_blocks(lambdas.size(), std::max(workers, 1),
                  [&](std::size_t i) { out[i] = spherical_transform(f, lambdas[i]); });
  return out;
}

double l2_norm_squared(const RadialFunction& f) {
  auto g = [&](double r) {
    const double v = f(r);
    return v * v * std::sinh(r);
  };
  return 2.0 * kPi * gl_panels(g, 0.0, f.radius(), transform_panels(f.radius(), 0.0));
}

std::vector<double> lambda_grid(double lo, double hi, std::size_t n) {
  if (n < 2 || !(hi > lo)) {
    throw DomainError("lambda_grid: need n >= 2 and hi > lo");
  }
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return g;
}

double sobolev_norm(const RadialFunction& f, double beta, double m2, const SobolevOptions& opt) {
  if (!(opt.panel > 0.0) || !(opt.max_lambda > opt.panel)) {
    throw DomainError("sobolev_norm: bad panel or max_lambda");
  }
  if (!(m2 + 0.25 > 0.0)) {
    throw DomainError("sobolev_norm: need m2 > -1/4");
  }
  const auto& nodes = GL::abscissa();
  const auto& weights = GL::weights();
  double total = 0.0;
  int quiet = 0;
  for (double lo = 0.0; lo < opt.max_lambda; lo += opt.panel) {
    // Both halves of the symmetric Gauss-Legendre rule.
    std::vector<double> ls;
    std::vector<double> ws;
    const double mid = lo + 0.5 * opt.panel;
    const double half = 0.5 * opt.panel;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      ls.push_back(mid + half * nodes[i]);
      ws.push_back(half * weights[i]);
      if (nodes[i] != 0.0) {
        ls.push_back(mid - half * nodes[i]);
        ws.push_back(half * weights[i]);
      }
    }
    const std::vector<double> fh = spherical_transform(f, ls, opt.workers);
    double panel = 0.0;
    for (std::size_t i = 0; i < ls.size(); ++i) {
      const double l = ls[i];
      panel += ws[i] * fh[i] * fh[i] * std::pow(l * l + 0.25 + m2, beta) * plancherel_density(l);
    }
    total += panel;
    quiet = (std::abs(panel) <= opt.tail_tol * std::abs(total)) ? quiet + 1 : 0;
    if (quiet >= 2 && lo >= 4.0) {
      return std::sqrt(total);
    }
  }
  throw DivergenceError("sobolev_norm: spectral integrand has not decayed by lambda = " +
                        std::to_string(opt.max_lambda) + " (beta = " + std::to_string(beta) + ")");
}

RadialFunction chi_eps(double eps, std::size_t n) {
  if (!(eps > 0.0) || eps > 1.0) {
    throw DomainError("chi_eps: need 0 < eps <= 1");
  }
  auto bump = [eps](double r) {
    const double s = r / eps;
    return s < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0;
  };
  const double mass =
      2.0 * kPi * gl_panels([&](double r) { return bump(r) * std::sinh(r); }, 0.0, eps, 16);
  return RadialFunction::sample([&](double r) { return bump(r) / mass; }, eps, n);
}

CauchyProbe chi_eps_cauchy_probe(double eps, double eps2, double delta, double m2,
                                 const std::vector<double>& lambdas, int workers) {
  if (!(eps > 0.0 && eps <= 1.0 && eps2 > 0.0 && eps2 <= 1.0)) {
    throw DomainError("chi_eps_cauchy_probe: need eps, eps' in (0, 1]");
  }
  if (delta > 2.0) {
    throw DomainError("chi_eps_cauchy_probe: need delta <= 2");
  }
  CauchyProbe out;
  out.lambdas = lambdas;
  out.differences.assign(lambdas.size(), 0.0);
  if (eps == eps2) {
    return out;
  }
  const std::vector<double> a = spherical_transform(chi_eps(eps), lambdas, workers);
  const std::vector<double> b = spherical_transform(chi_eps(eps2), lambdas, workers);
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const double l = lambdas[i];
    out.differences[i] = std::abs(a[i] - b[i]);
    const double w = out.differences[i] * std::pow(l * l + 0.25 + m2, -0.25 * delta);
    if (w > out.sup) {
      out.sup = w;
      out.argmax = l;
    }
  }
  return out;
}

}  // namespace adscft
