#include "adscft/gff.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>

#include "adscft/parallel.hpp"
#include "adscft/rng.hpp"

namespace adscft {

namespace {

constexpr char kCacheMagic[8] = {'A', 'D', 'S', 'C', 'F', 'T', 'C', 'V'};
constexpr std::uint32_t kCacheVersion = 1;
constexpr std::size_t kBlock = 4096;

Matrix cholesky_factor(const Matrix& C) {
  Eigen::LLT<Matrix> llt(C);
  if (llt.info() != Eigen::Success) {
    throw FactorizationError("covariance: Cholesky factorization failed (matrix not positive definite)");
  }
  Matrix L = llt.matrixL();
  const double scale = C.norm();
  const double resid = (L * L.transpose() - C).norm();
  if (!(resid <= 1e-10 * scale)) {
    throw FactorizationError("covariance: factor reproduces C only to relative " +
                             std::to_string(resid / scale));
  }
  return L;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
  }
  return r;
}

double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) {
    r *= i;
  }
  return r;
}

// (n - 1)!! for even n >= 0: the moment E[X^n] / c^{n/2}.
double odd_double_factorial(int n) {
  double r = 1.0;
  for (int i = n - 1; i > 1; i -= 2) {
    r *= i;
  }
  return r;
}

// Coefficients of :phi^m: = sum_k coef[k] phi^{m-2k} for variance c.
std::vector<double> wick_monomials(int m, double c) {
  std::vector<double> coef;
  for (int k = 0; 2 * k <= m; ++k) {
    coef.push_back((k % 2 == 0 ? 1.0 : -1.0) * factorial(m) /
                   (factorial(k) * factorial(m - 2 * k) * std::pow(2.0, k)) * std::pow(c, k));
  }
  return coef;
}

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  void add(double x) {
    sum += x;
    sum_sq += x * x;
  }
};

}  // namespace

LatticeRegion LatticeRegion::uniform(int d, std::pair<double, double> z_range,
                                     std::vector<std::pair<double, double>> x_box,
                                     std::vector<int> points) {
  if (d < 1) {
    throw DomainError("LatticeRegion: d must be >= 1");
  }
  if (static_cast<int>(x_box.size()) != d || static_cast<int>(points.size()) != d + 1) {
    throw DomainError("LatticeRegion: need d x-ranges and d+1 point counts");
  }
  if (!(z_range.first > 0.0) || !(z_range.second > z_range.first)) {
    throw DomainError("LatticeRegion: need 0 < z_min < z_max");
  }
  for (const auto& r : x_box) {
    if (!(r.second > r.first)) {
      throw DomainError("LatticeRegion: empty x-range");
    }
  }
  for (int n : points) {
    if (n < 1) {
      throw DomainError("LatticeRegion: point counts must be >= 1");
    }
  }
  LatticeRegion r;
  r.d = d;
  r.z_range = z_range;
  r.x_box = std::move(x_box);
  r.points = std::move(points);
  r.h.push_back((z_range.second - z_range.first) / r.points[0]);
  for (int a = 0; a < d; ++a) {
    r.h.push_back((r.x_box[a].second - r.x_box[a].first) / r.points[a + 1]);
  }
  double cell = 1.0;
  for (double hh : r.h) {
    cell *= hh;
  }
  std::size_t total = 1;
  for (int n : r.points) {
    total *= static_cast<std::size_t>(n);
  }
  std::vector<int> multi(d + 1, 0);
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rest = i;
    for (int a = 0; a <= d; ++a) {
      multi[a] = static_cast<int>(rest % r.points[a]);
      rest /= r.points[a];
    }
    const double z = z_range.first + (multi[0] + 0.5) * r.h[0];
    Vector x(d);
    for (int a = 0; a < d; ++a) {
      x(a) = r.x_box[a].first + (multi[a + 1] + 0.5) * r.h[a + 1];
    }
    r.sites.emplace_back(z, x);
    r.vol_weights.push_back(std::pow(z, -d - 1.0) * cell);
  }
  return r;
}

std::size_t LatticeRegion::index(const std::vector<int>& multi) const {
  if (static_cast<int>(multi.size()) != d + 1) {
    throw DomainError("LatticeRegion::index: wrong number of axes");
  }
  std::size_t i = 0;
  for (int a = d; a >= 0; --a) {
    if (multi[a] < 0 || multi[a] >= points[a]) {
      throw DomainError("LatticeRegion::index: out of range");
    }
    i = i * points[a] + multi[a];
  }
  return i;
}

CovarianceMatrix build_covariance(const LatticeRegion& region, const ModelParams& p, int collar) {
  if (p.d != region.d) {
    throw DomainError("build_covariance: dimension mismatch");
  }
  if (collar < 0) {
    throw DomainError("build_covariance: negative collar");
  }
  const int d = region.d;
  const double z_floor = region.z_range.first - collar * region.h[0];
  if (!(z_floor > 0.0)) {
    throw DomainError("build_covariance: collar reaches z <= 0 (z_min - collar h_z = " +
                      std::to_string(z_floor) + ")");
  }
  std::vector<int> ext(d + 1);
  std::size_t n_ext = 1;
  for (int a = 0; a <= d; ++a) {
    ext[a] = region.points[a] + 2 * collar;
    n_ext *= static_cast<std::size_t>(ext[a]);
  }
  double cell = 1.0;
  for (double hh : region.h) {
    cell *= hh;
  }
  auto z_of = [&](int k) { return region.z_range.first + (k - collar + 0.5) * region.h[0]; };

  std::vector<Eigen::Triplet<double>> trips;
  std::vector<int> multi(d + 1);
  std::vector<std::size_t> stride(d + 1, 1);
  for (int a = 1; a <= d; ++a) {
    stride[a] = stride[a - 1] * ext[a - 1];
  }
  for (std::size_t i = 0; i < n_ext; ++i) {
    std::size_t rest = i;
    for (int a = 0; a <= d; ++a) {
      multi[a] = static_cast<int>(rest % ext[a]);
      rest /= ext[a];
    }
    const double z = z_of(multi[0]);
    double diag = p.m2 * std::pow(z, -d - 1.0) * cell;
    for (int a = 0; a <= d; ++a) {
      const double h2 = region.h[a] * region.h[a];
      for (int dir : {-1, 1}) {
        const double ze = a == 0 ? z + 0.5 * dir * region.h[0] : z;
        const double w = std::pow(ze, 1.0 - d) * cell / h2;
        diag += w;
        const int k = multi[a] + dir;
        if (k >= 0 && k < ext[a]) {
          const std::size_t j = dir > 0 ? i + stride[a] : i - stride[a];
          trips.emplace_back(static_cast<int>(i), static_cast<int>(j), -w);
        }
      }
    }
    trips.emplace_back(static_cast<int>(i), static_cast<int>(i), diag);
  }
  Eigen::SparseMatrix<double> M(static_cast<int>(n_ext), static_cast<int>(n_ext));
  M.setFromTriplets(trips.begin(), trips.end());

  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(M);
  if (llt.info() != Eigen::Success) {
    throw FactorizationError("build_covariance: discrete operator is not positive definite");
  }

  // Region site -> extended index.
  const std::size_t n = region.size();
  std::vector<std::size_t> map(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t rest = i;
    std::size_t e = 0;
    for (int a = 0; a <= d; ++a) {
      const int k = static_cast<int>(rest % region.points[a]) + collar;
      rest /= region.points[a];
      e += k * stride[a];
    }
    map[i] = e;
  }
  Matrix rhs = Matrix::Zero(static_cast<Eigen::Index>(n_ext), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    rhs(static_cast<Eigen::Index>(map[i]), static_cast<Eigen::Index>(i)) = 1.0;
  }
  const Matrix sol = llt.solve(rhs);
  CovarianceMatrix cov;
  cov.C.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    cov.C.row(static_cast<Eigen::Index>(i)) = sol.row(static_cast<Eigen::Index>(map[i]));
  }
  cov.C = 0.5 * (cov.C + cov.C.transpose()).eval();

  // Smallest eigenvalue of M by power iteration on M^{-1}.
  Vector v = Vector::Ones(static_cast<Eigen::Index>(n_ext)).normalized();
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    Vector u = llt.solve(v);
    const double next = u.norm();
    v = u / next;
    if (std::abs(next - lambda) <= 1e-10 * next) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  cov.min_eigenvalue = 1.0 / lambda;
  if (!(cov.min_eigenvalue > 0.0)) {
    throw FactorizationError("build_covariance: minimum eigenvalue not positive");
  }
  cov.factor = cholesky_factor(cov.C);
  return cov;
}

CovarianceMatrix covariance_from_matrix(const Matrix& C) {
  if (C.rows() != C.cols() || C.rows() == 0) {
    throw DomainError("covariance_from_matrix: need a nonempty square matrix");
  }
  CovarianceMatrix cov;
  cov.C = 0.5 * (C + C.transpose());
  cov.factor = cholesky_factor(cov.C);
  return cov;
}

void save_covariance(const CovarianceMatrix& cov, const std::string& path) {
  static_assert(std::endian::native == std::endian::little, "cache format is little-endian");
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("save_covariance: cannot open " + path);
  }
  const std::uint64_t n = cov.size();
  const std::uint32_t reserved = 0;
  out.write(kCacheMagic, sizeof kCacheMagic);
  out.write(reinterpret_cast<const char*>(&kCacheVersion), sizeof kCacheVersion);
  out.write(reinterpret_cast<const char*>(&reserved), sizeof reserved);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  for (std::uint64_t i = 0; i < n; ++i) {
    for (std::uint64_t j = 0; j < n; ++j) {
      const double x = cov.C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      out.write(reinterpret_cast<const char*>(&x), sizeof x);
    }
  }
  if (!out) {
    throw std::runtime_error("save_covariance: write failed for " + path);
  }
}

CovarianceMatrix load_covariance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("load_covariance: cannot open " + path);
  }
  char magic[8];
  std::uint32_t version = 0;
  std::uint32_t reserved = 0;
  std::uint64_t n = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&reserved), sizeof reserved);
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in || std::memcmp(magic, kCacheMagic, sizeof magic) != 0) {
    throw std::runtime_error("load_covariance: not a covariance cache: " + path);
  }
  if (version != kCacheVersion) {
    throw std::runtime_error("load_covariance: unsupported cache version " + std::to_string(version));
  }
  Matrix C(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::uint64_t i = 0; i < n; ++i) {
    for (std::uint64_t j = 0; j < n; ++j) {
      double x = 0.0;
      in.read(reinterpret_cast<char*>(&x), sizeof x);
      C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x;
    }
  }
  if (!in) {
    throw std::runtime_error("load_covariance: truncated cache " + path);
  }
  return covariance_from_matrix(C);
}

void sample_into(const CovarianceMatrix& cov, std::uint64_t seed, std::uint64_t draw, Vector& xi,
                 Vector& out) {
  const Eigen::Index n = cov.factor.rows();
  xi.resize(n);
  NormalStream normal(seed, draw);
  for (Eigen::Index i = 0; i < n; ++i) {
    xi(i) = normal();
  }
  out.noalias() = cov.factor.triangularView<Eigen::Lower>() * xi;
}

FieldSample sample_field(const CovarianceMatrix& cov, std::uint64_t seed, std::uint64_t draw) {
  FieldSample s;
  s.seed = seed;
  s.draw = draw;
  Vector xi;
  sample_into(cov, seed, draw, xi, s.values);
  return s;
}

CameronMartinResult cameron_martin_check(const CovarianceMatrix& cov, const Vector& w,
                                         TestFunctional kind, const Vector& v) {
  const Matrix& C = cov.C;
  if (w.size() != C.rows() || (kind != TestFunctional::one && v.size() != C.rows())) {
    throw DomainError("cameron_martin_check: vector size mismatch");
  }
  // lhs: phi + C w ~ N(C w, C).
  const Vector shift = C * w;
  CameronMartinResult r;
  switch (kind) {
    case TestFunctional::one:
      r.lhs = 1.0;
      break;
    case TestFunctional::linear:
      r.lhs = v.dot(shift);
      break;
    case TestFunctional::quadratic:
      r.lhs = std::pow(v.dot(shift), 2) + v.dot(C * v);
      break;
    case TestFunctional::exponential:
      r.lhs = std::exp(v.dot(shift) + 0.5 * v.dot(C * v));
      break;
  }
  // rhs: derivatives at t = 0 of E[exp(phi.(w + t v))] exp(-w^T C w / 2).
  const double ww = w.dot(C * w);
  switch (kind) {
    case TestFunctional::one:
      r.rhs = std::exp(0.5 * w.transpose() * C * w - 0.5 * ww);
      break;
    case TestFunctional::linear:
      r.rhs = w.transpose() * C * v;
      break;
    case TestFunctional::quadratic: {
      const double s = w.transpose() * C * v;
      r.rhs = s * s + v.transpose() * C * v;
      break;
    }
    case TestFunctional::exponential: {
      const Vector u = w + v;
      r.rhs = std::exp(0.5 * u.dot(C * u) - 0.5 * ww);
      break;
    }
  }
  r.gap = std::abs(r.lhs - r.rhs);
  return r;
}

CameronMartinResult cameron_martin_mc(const CovarianceMatrix& cov, const Vector& w,
                                      const std::function<double(const Vector&)>& F,
                                      std::uint64_t seed, std::size_t samples, int workers) {
  if (samples < 2) {
    throw DomainError("cameron_martin_mc: need at least two samples");
  }
  const Vector shift = cov.C * w;
  const double half_ww = 0.5 * w.dot(shift);
  const std::size_t n_blocks = (samples + kBlock - 1) / kBlock;
  std::vector<Moments> lhs(n_blocks), rhs(n_blocks);
  parallel_blocks(n_blocks, resolve_workers(workers), [&](std::size_t b) {
    Vector xi, phi;
    const std::size_t end = std::min(samples, (b + 1) * kBlock);
    for (std::size_t k = b * kBlock; k < end; ++k) {
      sample_into(cov, seed, 2 * k, xi, phi);
      lhs[b].add(F(phi + shift));
      sample_into(cov, seed, 2 * k + 1, xi, phi);
      rhs[b].add(std::exp(phi.dot(w) - half_ww) * F(phi));
    }
  });
  auto finish = [&](const std::vector<Moments>& m, double& mean, double& se) {
    double s = 0.0, s2 = 0.0;
    for (const auto& x : m) {
      s += x.sum;
      s2 += x.sum_sq;
    }
    const double n = static_cast<double>(samples);
    mean = s / n;
    const double var = std::max(0.0, (s2 - n * mean * mean) / (n - 1.0));
    se = std::sqrt(var / n);
  };
  CameronMartinResult r;
  finish(lhs, r.lhs, r.lhs_se);
  finish(rhs, r.rhs, r.rhs_se);
  r.gap = std::abs(r.lhs - r.rhs);
  return r;
}

double wick_power(double phi, double c, int j, int j_max) {
  if (j < 0 || j > j_max) {
    throw DomainError("wick_power: j = " + std::to_string(j) + " outside [0, " +
                      std::to_string(j_max) + "]");
  }
  if (!(c >= 0.0)) {
    throw DomainError("wick_power: negative variance");
  }
  double prev = 1.0;
  if (j == 0) {
    return prev;
  }
  double cur = phi;
  for (int k = 1; k < j; ++k) {
    const double next = phi * cur - k * c * prev;
    prev = cur;
    cur = next;
  }
  if (!std::isfinite(cur)) {
    throw std::overflow_error("wick_power: overflow at j = " + std::to_string(j));
  }
  return cur;
}

double wick_smeared(const Vector& phi, const Vector& variances, const Vector& g, int n) {
  if (phi.size() != variances.size() || phi.size() != g.size()) {
    throw DomainError("wick_smeared: size mismatch");
  }
  double s = 0.0;
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    s += g(i) * wick_power(phi(i), variances(i), n);
  }
  return s;
}

double wick_shifted(const Vector& phi, const Vector& variances, const Vector& f, const Vector& g,
                    int n) {
  if (f.size() != phi.size()) {
    throw DomainError("wick_shifted: size mismatch");
  }
  double s = 0.0;
  for (int j = 0; j <= n; ++j) {
    const Vector gf = g.cwiseProduct(f.array().pow(n - j).matrix());
    s += binomial(n, j) * wick_smeared(phi, variances, gf, j);
  }
  return s;
}

double gaussian_pair_moment(int a, int b, double cxx, double cyy, double cxy) {
  if (a < 0 || b < 0) {
    throw DomainError("gaussian_pair_moment: negative power");
  }
  // Pair r of the X's with r of the Y's; the rest pair among themselves.
  double s = 0.0;
  for (int r = 0; r <= std::min(a, b); ++r) {
    if ((a - r) % 2 != 0 || (b - r) % 2 != 0) {
      continue;
    }
    s += binomial(a, r) * binomial(b, r) * factorial(r) * std::pow(cxy, r) *
         odd_double_factorial(a - r) * std::pow(cxx, 0.5 * (a - r)) *
         odd_double_factorial(b - r) * std::pow(cyy, 0.5 * (b - r));
  }
  return s;
}

double wick_pair_expectation(const Matrix& C, const Vector& f, const Vector& g, int m, int n) {
  if (f.size() != C.rows() || g.size() != C.rows()) {
    throw DomainError("wick_pair_expectation: size mismatch");
  }
  double s = 0.0;
  for (Eigen::Index i = 0; i < C.rows(); ++i) {
    const auto ci = wick_monomials(m, C(i, i));
    for (Eigen::Index j = 0; j < C.rows(); ++j) {
      const auto cj = wick_monomials(n, C(j, j));
      double e = 0.0;
      for (std::size_t k = 0; k < ci.size(); ++k) {
        for (std::size_t l = 0; l < cj.size(); ++l) {
          e += ci[k] * cj[l] *
               gaussian_pair_moment(m - 2 * static_cast<int>(k), n - 2 * static_cast<int>(l),
                                    C(i, i), C(j, j), C(i, j));
        }
      }
      s += f(i) * g(j) * e;
    }
  }
  return s;
}

double wick_pair_closed_form(const Matrix& C, const Vector& f, const Vector& g, int m, int n) {
  if (m != n) {
    return 0.0;
  }
  return factorial(n) * f.dot(C.array().pow(n).matrix() * g);
}

}  // namespace adscft
