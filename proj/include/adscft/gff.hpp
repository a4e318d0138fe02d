#pragma once

// Lattice Gaussian free field on a box in H^{d+1}: the covariance is the
// inverse of the metric-weighted finite-difference form of -Delta + m^2 with
// Dirichlet data outside a collar, so Gaussian identities hold exactly at
// finite dimension.

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "adscft/geometry.hpp"
#include "adscft/params.hpp"

namespace adscft {

/// Cell-centred tensor grid in (z, x_1..x_d). Axis 0 is z. Site index runs
/// with z fastest: i = i_z + n_z (i_1 + n_1 (i_2 + ...)).
struct LatticeRegion {
  int d = 1;
  std::pair<double, double> z_range;
  std::vector<std::pair<double, double>> x_box;
  std::vector<int> points;  // per axis, z first
  std::vector<double> h;    // per axis spacing, z first
  std::vector<BulkPoint> sites;
  std::vector<double> vol_weights;  // z^{-d-1} prod(h)

  static LatticeRegion uniform(int d, std::pair<double, double> z_range,
                               std::vector<std::pair<double, double>> x_box,
                               std::vector<int> points);

  std::size_t size() const { return sites.size(); }
  std::size_t index(const std::vector<int>& multi) const;
};

struct CovarianceMatrix {
  Matrix C;
  Matrix factor;  // lower triangular, factor * factor^T = C
  double min_eigenvalue = 0.0;  // of the discrete operator (0 when built from C)

  std::size_t size() const { return static_cast<std::size_t>(C.rows()); }
  Vector diagonal() const { return C.diagonal(); }
};

/// C = M^{-1} restricted to the region, M the discrete form on the region plus
/// `collar` cells per side. Throws FactorizationError if M is not positive
/// definite and DomainError if the collar would reach z <= 0.
CovarianceMatrix build_covariance(const LatticeRegion& region, const ModelParams& p,
                                  int collar = 3);

/// Wraps a given SPD matrix (symmetrized) with its Cholesky factor.
CovarianceMatrix covariance_from_matrix(const Matrix& C);

/// Versioned little-endian binary cache of C (row-major); loading refactors.
void save_covariance(const CovarianceMatrix& cov, const std::string& path);
CovarianceMatrix load_covariance(const std::string& path);

struct FieldSample {
  Vector values;
  std::uint64_t seed = 0;
  std::uint64_t draw = 0;
};

/// values = factor * xi with xi from stream (seed, draw).
FieldSample sample_field(const CovarianceMatrix& cov, std::uint64_t seed, std::uint64_t draw = 0);

/// Same as sample_field without allocation; `xi` is scratch of size N.
void sample_into(const CovarianceMatrix& cov, std::uint64_t seed, std::uint64_t draw, Vector& xi,
                 Vector& out);

enum class TestFunctional { one, linear, quadratic, exponential };

struct CameronMartinResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
  double lhs_se = 0.0;  // zero for closed forms
  double rhs_se = 0.0;
};

/// lhs = E[F(phi + C w)], rhs = E[exp(phi.w - w^T C w / 2) F(phi)] for
/// F = 1, phi.v, (phi.v)^2 or exp(phi.v); lhs by direct Gaussian moments of
/// the shifted field, rhs by differentiating the moment generating function.
CameronMartinResult cameron_martin_check(const CovarianceMatrix& cov, const Vector& w,
                                         TestFunctional kind, const Vector& v);

/// Both sides by Monte Carlo on independent streams; gap in units of the
/// combined standard error is gap / sqrt(lhs_se^2 + rhs_se^2).
CameronMartinResult cameron_martin_mc(const CovarianceMatrix& cov, const Vector& w,
                                      const std::function<double(const Vector&)>& F,
                                      std::uint64_t seed, std::size_t samples, int workers = 0);

inline constexpr int kWickMaxPower = 8;

/// :phi^j: for variance c, i.e. c^{j/2} He_j(phi / sqrt(c)), via
/// W_{j+1} = phi W_j - j c W_{j-1}. Throws DomainError for j outside
/// [0, j_max] and std::overflow_error on a non-finite result.
double wick_power(double phi, double c, int j, int j_max = kWickMaxPower);

/// :phi^n:(g) = sum_i g_i :phi_i^n: with variances diag(C).
double wick_smeared(const Vector& phi, const Vector& variances, const Vector& g, int n);

/// :(phi + f)^n:(g) expanded as sum_j binom(n, j) :phi^j:(g f^{n-j}).
double wick_shifted(const Vector& phi, const Vector& variances, const Vector& f, const Vector& g,
                    int n);

/// E[X^a Y^b] for a centred Gaussian pair with the given covariances.
double gaussian_pair_moment(int a, int b, double cxx, double cyy, double cxy);

/// E[:phi^m:(f) :phi^n:(g)] by expanding both Wick powers into monomials and
/// taking Gaussian moments.
double wick_pair_expectation(const Matrix& C, const Vector& f, const Vector& g, int m, int n);

/// delta_{mn} n! f^T C^{o n} g (entrywise power).
double wick_pair_closed_form(const Matrix& C, const Vector& f, const Vector& g, int m, int n);

}  // namespace adscft
