#include "adscft/functionals.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss.hpp>

#include "adscft/parallel.hpp"
#include "adscft/propagators.hpp"
#include "adscft/rng.hpp"

namespace adscft {

namespace {

constexpr std::size_t kBlock = 4096;
constexpr std::uint64_t kTildeStream = 0xd1b54a32d192ed03ULL;

constexpr auto kBinomial = [] {
  std::array<std::array<double, kWickMaxPower + 1>, kWickMaxPower + 1> t{};
  for (int n = 0; n <= kWickMaxPower; ++n) {
    t[n][0] = 1.0;
    for (int k = 1; k <= n; ++k) {
      t[n][k] = t[n - 1][k - 1] + (k < n ? t[n - 1][k] : 0.0);
    }
  }
  return t;
}();

// Appends Gauss-Legendre nodes and weights for [a, b].
void add_panel(double a, double b, std::vector<double>& x, std::vector<double>& w) {
  using GL = boost::math::quadrature::gauss<double, 20>;
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const auto& ax = GL::abscissa();
  const auto& aw = GL::weights();
  for (std::size_t i = 0; i < ax.size(); ++i) {
    x.push_back(mid + half * ax[i]);
    w.push_back(half * aw[i]);
    if (ax[i] != 0.0) {
      x.push_back(mid - half * ax[i]);
      w.push_back(half * aw[i]);
    }
  }
}

// Normalized Hermite functions h_0..h_{m-1} at t.
void hermite_functions(double t, int m, double* out) {
  const double h0 = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * t * t);
  out[0] = h0;
  if (m > 1) {
    out[1] = std::numbers::sqrt2 * t * h0;
  }
  for (int k = 1; k + 1 < m; ++k) {
    out[k + 1] = std::sqrt(2.0 / (k + 1)) * t * out[k] - std::sqrt(static_cast<double>(k) / (k + 1)) * out[k - 1];
  }
}

struct RatioSums {
  double a = 0.0, b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
};

}  // namespace

Interaction Interaction::uniform(std::size_t sites, const std::vector<double>& a,
                                 std::vector<bool> mask) {
  if (a.empty()) {
    throw DomainError("Interaction: need at least one coefficient");
  }
  Interaction V;
  V.degree = static_cast<int>(a.size()) - 1;
  for (double aj : a) {
    V.coeffs.push_back(Vector::Constant(static_cast<Eigen::Index>(sites), aj));
  }
  V.mask = mask.empty() ? std::vector<bool>(sites, true) : std::move(mask);
  V.validate();
  return V;
}

Interaction Interaction::zero(std::size_t sites) {
  Interaction V;
  V.degree = 0;
  V.coeffs.push_back(Vector::Zero(static_cast<Eigen::Index>(sites)));
  V.mask = std::vector<bool>(sites, true);
  return V;
}

bool Interaction::is_zero() const {
  for (const auto& c : coeffs) {
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      if (mask[static_cast<std::size_t>(i)] && c(i) != 0.0) {
        return false;
      }
    }
  }
  return true;
}

void Interaction::validate() const {
  if (degree < 0 || degree % 2 != 0) {
    throw DomainError("Interaction: degree must be even, got " + std::to_string(degree));
  }
  if (degree > kWickMaxPower) {
    throw DomainError("Interaction: degree above the Wick power limit");
  }
  if (static_cast<int>(coeffs.size()) != degree + 1) {
    throw DomainError("Interaction: need degree + 1 coefficient vectors");
  }
  for (const auto& c : coeffs) {
    if (static_cast<std::size_t>(c.size()) != mask.size()) {
      throw DomainError("Interaction: coefficient size differs from the mask");
    }
  }
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] && coeffs[degree](static_cast<Eigen::Index>(i)) < 0.0) {
      throw DomainError("Interaction: leading coefficient negative at site " + std::to_string(i));
    }
  }
}

double potential_eval(const Interaction& V, const LatticeRegion& region,
                      const CovarianceMatrix& cov, const Vector& phi, const Vector& shift) {
  const std::size_t n = V.sites();
  if (region.size() != n || cov.size() != n || static_cast<std::size_t>(phi.size()) != n ||
      static_cast<std::size_t>(shift.size()) != n) {
    throw DomainError("potential_eval: size mismatch");
  }
  double wick[kWickMaxPower + 1];
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!V.mask[i]) {
      continue;
    }
    const auto ii = static_cast<Eigen::Index>(i);
    const double c = cov.C(ii, ii);
    const double x = phi(ii);
    const double s = shift(ii);
    wick[0] = 1.0;
    if (V.degree >= 1) {
      wick[1] = x;
    }
    for (int k = 1; k < V.degree; ++k) {
      wick[k + 1] = x * wick[k] - k * c * wick[k - 1];
    }
    double site = 0.0;
    for (int j = 0; j <= V.degree; ++j) {
      const double fj = V.coeffs[j](ii);
      if (fj == 0.0) {
        continue;
      }
      double term = 0.0;
      double spow = 1.0;
      for (int k = j; k >= 0; --k) {
        term += kBinomial[j][k] * wick[k] * spow;
        spow *= s;
      }
      site += fj * term;
    }
    total += region.vol_weights[i] * site;
  }
  if (!std::isfinite(total)) {
    throw std::overflow_error("potential_eval: non-finite potential");
  }
  return total;
}

GaussHermite gauss_hermite(int n) {
  if (n < 1) {
    throw DomainError("gauss_hermite: need n >= 1");
  }
  Matrix J = Matrix::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(J);
  GaussHermite gh;
  for (int i = 0; i < n; ++i) {
    gh.nodes.push_back(eig.eigenvalues()(i));
    gh.weights.push_back(std::pow(eig.eigenvectors()(0, i), 2));
  }
  return gh;
}

FunctionalEstimate expectation_ratio(const Interaction& V, const LatticeRegion& region,
                                     const CovarianceMatrix& cov, const Vector& shift,
                                     const EstimatorOptions& opt) {
  V.validate();
  FunctionalEstimate est;
  if (V.is_zero()) {
    est.method = Method::exact;
    est.value = 1.0;
    est.expectation_ratio = 1.0;
    return est;
  }
  const auto n = static_cast<Eigen::Index>(cov.size());
  const Vector zero = Vector::Zero(n);

  if (opt.method == Method::quadrature || opt.method == Method::exact) {
    if (n > 4) {
      throw DomainError("expectation_ratio: quadrature supports at most 4 sites");
    }
    const GaussHermite gh = gauss_hermite(opt.gh_points);
    const int q = opt.gh_points;
    std::size_t total = 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      total *= static_cast<std::size_t>(q);
    }
    double num = 0.0;
    double den = 0.0;
    Vector xi(n);
    for (std::size_t t = 0; t < total; ++t) {
      std::size_t rest = t;
      double w = 1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = rest % q;
        rest /= q;
        xi(i) = gh.nodes[k];
        w *= gh.weights[k];
      }
      const Vector phi = cov.factor * xi;
      num += w * std::exp(-potential_eval(V, region, cov, phi, shift));
      den += w * std::exp(-potential_eval(V, region, cov, phi, zero));
    }
    est.method = Method::quadrature;
    est.n_samples = total;
    est.value = est.expectation_ratio = num / den;
    return est;
  }

  if (opt.samples < 2) {
    throw DomainError("expectation_ratio: need at least two samples");
  }
  const std::size_t n_blocks = (opt.samples + kBlock - 1) / kBlock;
  std::vector<RatioSums> blocks(n_blocks);
  parallel_blocks(n_blocks, resolve_workers(opt.workers), [&](std::size_t b) {
    Vector xi, phi;
    RatioSums s;
    const std::size_t end = std::min(opt.samples, (b + 1) * kBlock);
    for (std::size_t k = b * kBlock; k < end; ++k) {
      sample_into(cov, opt.seed, k, xi, phi);
      const double a = std::exp(-potential_eval(V, region, cov, phi, shift));
      const double d = std::exp(-potential_eval(V, region, cov, phi, zero));
      s.a += a;
      s.b += d;
      s.aa += a * a;
      s.bb += d * d;
      s.ab += a * d;
    }
    blocks[b] = s;
  });
  RatioSums s;
  for (const auto& x : blocks) {
    s.a += x.a;
    s.b += x.b;
    s.aa += x.aa;
    s.bb += x.bb;
    s.ab += x.ab;
  }
  const double N = static_cast<double>(opt.samples);
  const double ma = s.a / N;
  const double mb = s.b / N;
  const double va = (s.aa - N * ma * ma) / (N - 1.0);
  const double vb = (s.bb - N * mb * mb) / (N - 1.0);
  const double cab = (s.ab - N * ma * mb) / (N - 1.0);
  const double r = ma / mb;
  const double var_r = std::max(0.0, (va - 2.0 * r * cab + r * r * vb) / (N * mb * mb));
  est.method = Method::monte_carlo;
  est.n_samples = opt.samples;
  est.value = est.expectation_ratio = r;
  est.std_error = std::sqrt(var_r);
  if (!(est.std_error <= opt.max_relative_error * std::abs(r))) {
    throw EstimationError("expectation_ratio: relative standard error " +
                          std::to_string(est.std_error / std::abs(r)) + " above " +
                          std::to_string(opt.max_relative_error) + " at " +
                          std::to_string(opt.samples) + " samples");
  }
  return est;
}

Vector bulk_shift(const ModelParams& p, const LatticeRegion& region, const BoundaryFunction& f) {
  Vector s(static_cast<Eigen::Index>(region.size()));
  for (std::size_t i = 0; i < region.size(); ++i) {
    s(static_cast<Eigen::Index>(i)) =
        smeared_bulk_to_boundary(p, KernelSign::plus, region.sites[i], f).value;
  }
  return s;
}

HermiteBasis::HermiteBasis(int d, int m, double scale, std::vector<double> knots)
    : m_(m), scale_(scale) {
  if (d != 1) {
    throw DomainError("HermiteBasis: only d = 1 is supported");
  }
  if (m < 1 || !(scale > 0.0)) {
    throw DomainError("HermiteBasis: need m >= 1 and scale > 0");
  }
  // h_k(kappa s) is negligible beyond |kappa s| = sqrt(2m + 1) + 8.
  const double kmax = (std::sqrt(2.0 * m + 1.0) + 8.0) / scale;
  const double panel = 0.25 / scale;
  std::vector<double> breaks = {0.0};
  // The radial kernel has a kappa^{2 nu} branch at 0; refine geometrically
  // toward it. Knots are extra panel breaks.
  const double start = 1e-8 / scale;
  breaks.push_back(start);
  for (double b = 2.0 * start; b < panel; b *= 2.0) {
    breaks.push_back(b);
  }
  for (double b = std::max(breaks.back(), 0.0) + panel; b < kmax; b += panel) {
    breaks.push_back(b);
  }
  breaks.push_back(kmax);
  for (double k : knots) {
    if (k > 0.0 && k < kmax) {
      breaks.push_back(k);
    }
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    add_panel(breaks[i], breaks[i + 1], nodes_, weights_);
  }
  psi_.resize(static_cast<Eigen::Index>(nodes_.size()), m);
  std::vector<double> h(m);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    hermite_functions(nodes_[i] * scale, m, h.data());
    for (int k = 0; k < m; ++k) {
      psi_(static_cast<Eigen::Index>(i), k) = std::sqrt(scale) * h[k];
    }
  }
}

Matrix HermiteBasis::multiplier_matrix(const std::function<double(double)>& M) const {
  // psi^_k = (-i)^k psi_k, so the pairing is real with sign i^{k-l} and
  // vanishes unless k + l is even.
  Vector wm(static_cast<Eigen::Index>(nodes_.size()));
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    wm(static_cast<Eigen::Index>(i)) = 2.0 * weights_[i] * M(nodes_[i]);
  }
  Matrix A = psi_.transpose() * wm.asDiagonal() * psi_;
  for (int k = 0; k < m_; ++k) {
    for (int l = 0; l < m_; ++l) {
      if ((k + l) % 2 != 0) {
        A(k, l) = 0.0;
      } else if (((k - l) / 2) % 2 != 0) {
        A(k, l) = -A(k, l);
      }
    }
  }
  return 0.5 * (A + A.transpose());
}

Vector HermiteBasis::coefficients(const BoundaryFunction& f) const {
  if (f.dim() != 1) {
    throw DomainError("HermiteBasis::coefficients: d = 1 only");
  }
  Vector b = Vector::Zero(m_);
  std::vector<double> x, w;
  for (const auto& t : f.terms()) {
    const double c = t.center(0);
    const double len = std::min(t.width, 0.3 * scale_);
    const int panels = static_cast<int>(std::ceil(24.0 * t.width / len));
    x.clear();
    w.clear();
    for (int i = 0; i < panels; ++i) {
      add_panel(c - 12.0 * t.width + i * 24.0 * t.width / panels,
                c - 12.0 * t.width + (i + 1) * 24.0 * t.width / panels, x, w);
    }
    std::vector<double> h(m_);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double fx = t.weight * std::exp(-0.5 * std::pow((x[i] - c) / t.width, 2));
      hermite_functions(x[i] / scale_, m_, h.data());
      for (int k = 0; k < m_; ++k) {
        b(k) += w[i] * fx * h[k] / std::sqrt(scale_);
      }
    }
  }
  return b;
}

Vector HermiteBasis::bulk_shift(const ModelParams& p, const LatticeRegion& region,
                                const Vector& b) const {
  if (p.d != 1 || region.d != 1) {
    throw DomainError("HermiteBasis::bulk_shift: d = 1 only");
  }
  if (b.size() > m_) {
    throw DomainError("HermiteBasis::bulk_shift: too many coefficients");
  }
  // Even k: (-1)^{k/2} 2 cos(kappa x); odd k: (-1)^{(k-1)/2} 2 sin(kappa x).
  Vector even = Vector::Zero(static_cast<Eigen::Index>(nodes_.size()));
  Vector odd = Vector::Zero(static_cast<Eigen::Index>(nodes_.size()));
  for (Eigen::Index k = 0; k < b.size(); ++k) {
    const double sign = ((k / 2) % 2 == 0) ? 2.0 : -2.0;
    if (k % 2 == 0) {
      even += sign * b(k) * psi_.col(k);
    } else {
      odd += sign * b(k) * psi_.col(k);
    }
  }
  Vector s(static_cast<Eigen::Index>(region.size()));
  for (std::size_t i = 0; i < region.size(); ++i) {
    const auto& site = region.sites[i];
    const double x = site.x(0);
    double sum = 0.0;
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
      const double k = nodes_[j];
      const double radial = bulk_to_boundary_fourier_radial(p, KernelSign::plus, site.z, k);
      const auto jj = static_cast<Eigen::Index>(j);
      sum += weights_[j] * radial * (even(jj) * std::cos(k * x) + odd(jj) * std::sin(k * x));
    }
    s(static_cast<Eigen::Index>(i)) = sum;
  }
  return s;
}

ProjectedPairing projected_inverse_pairing(const ModelParams& p, const CutoffSpec& n,
                                           const BoundaryFunction& f, int m, double scale) {
  const HermiteBasis basis(p.d, m, scale, {1.0 / n.n, static_cast<double>(n.n)});
  const Matrix A =
      basis.multiplier_matrix([&](double k) { return cutoff_multiplier(p, n, k); });
  const Vector b = basis.coefficients(f);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(A);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  ProjectedPairing out;
  out.m = m;
  out.condition_number = hi / lo;
  if (!(lo > 0.0) || out.condition_number > 1e14) {
    throw FactorizationError("projected_inverse_pairing: projected matrix singular (condition number " +
                             std::to_string(out.condition_number) + ")");
  }
  const Eigen::LLT<Matrix> llt(A);
  out.value = b.dot(llt.solve(b));
  return out;
}

FunctionalEstimate z_delta(const ModelParams& p, const LatticeRegion& region,
                           const CovarianceMatrix& cov, const Interaction& V,
                           const BoundaryFunction& f, int m, const CutoffSpec& n,
                           const EstimatorOptions& opt, double scale) {
  p.require_boundary_measure("z_delta");
  const ProjectedPairing q = projected_inverse_pairing(p, n, f, m, scale);
  FunctionalEstimate est;
  if (V.is_zero()) {
    est.method = Method::exact;
  } else {
    const HermiteBasis basis(p.d, m, scale, {1.0 / n.n, static_cast<double>(n.n)});
    const Vector shift = p.c * basis.bulk_shift(p, region, basis.coefficients(f));
    est = expectation_ratio(V, region, cov, shift, opt);
  }
  est.exponent = -0.5 * q.value;
  est.value = std::exp(est.exponent) * est.expectation_ratio;
  est.std_error *= std::exp(est.exponent);
  return est;
}

FunctionalEstimate z_ratio(const ModelParams& p, const LatticeRegion& region,
                           const CovarianceMatrix& cov, const Interaction& V,
                           const BoundaryFunction& f, const EstimatorOptions& opt) {
  p.require_boundary_measure("z_ratio");
  // -(f, alpha_-^{-1} f) / 2 = c^2 (f, alpha_+ f) / 2.
  const double plus = boundary_pairing(p, KernelSign::plus, f, f).value;
  FunctionalEstimate est;
  if (!V.is_zero()) {
    const Vector shift = p.c * bulk_shift(p, region, f);
    est = expectation_ratio(V, region, cov, shift, opt);
  }
  est.exponent = 0.5 * p.c * p.c * plus;
  est.value = std::exp(est.exponent) * est.expectation_ratio;
  est.std_error *= std::exp(est.exponent);
  return est;
}

FunctionalEstimate ztilde_ratio(const ModelParams& p, const LatticeRegion& region,
                                const CovarianceMatrix& cov, const Interaction& V,
                                const BoundaryFunction& f, const EstimatorOptions& opt) {
  FunctionalEstimate est;
  if (!V.is_zero()) {
    const Vector shift = bulk_shift(p, region, f);
    est = expectation_ratio(V, region, cov, shift, opt);
  }
  est.exponent = 0.5 * alpha_plus_closed_form(p, f);
  est.value = std::exp(est.exponent) * est.expectation_ratio;
  est.std_error *= std::exp(est.exponent);
  return est;
}

double ztilde_ratio_finite_z(const ModelParams& p, const BoundaryFunction& f, double z) {
  const CorrCoefficients coeffs = corr_coefficients(p.nu);
  return std::exp(0.5 * (raw_scaled_pairing(p, z, f) - corr_term(p, coeffs, z, f)));
}

DualityGap duality_gap(const ModelParams& p, const LatticeRegion& region,
                       const CovarianceMatrix& cov, const Interaction& V, const BoundaryFunction& f,
                       const EstimatorOptions& opt) {
  DualityGap g;
  g.z = z_ratio(p, region, cov, V, f, opt);
  EstimatorOptions tilde = opt;
  if (opt.method == Method::monte_carlo) {
    tilde.seed = mix64(opt.seed ^ kTildeStream);
  }
  g.ztilde = ztilde_ratio(p, region, cov, V, f.scaled(p.c), tilde);
  g.gap = g.z.value - g.ztilde.value;
  g.combined_se = std::hypot(g.z.std_error, g.ztilde.std_error);
  return g;
}

}  // namespace adscft
