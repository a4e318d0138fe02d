#pragma once

// Wick-ordered polynomial interactions on a lattice region and the two
// generating functionals
//   Z(f)/Z(0)   = exp(-(f, alpha_-^{-1} f)/2) E[e^{-V(phi + c H_+ f)}] / E[e^{-V(phi)}],
//   Zt(f)/Zt(0) = exp(+(alpha_+ f, f)/2)     E[e^{-V(phi + H_+ f)}]   / E[e^{-V(phi)}],
// with phi the lattice field of covariance G_+. Their duality
// Z(f)/Z(0) = Zt(c f)/Zt(0) holds when nu < d/2.

#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "adscft/boundary_function.hpp"
#include "adscft/gff.hpp"
#include "adscft/params.hpp"
#include "adscft/regularization.hpp"

namespace adscft {

/// Raised when a Monte Carlo ratio is too noisy to be meaningful.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// V(phi) = sum_i mask_i w_i sum_j f_j(i) :phi_i^j:, w_i the lattice volume weights.
struct Interaction {
  int degree = 0;
  std::vector<Vector> coeffs;  // coeffs[j], j = 0..degree, one entry per site
  std::vector<bool> mask;

  /// Same polynomial sum_j a_j :phi^j: on every site (optionally masked).
  static Interaction uniform(std::size_t sites, const std::vector<double>& a,
                             std::vector<bool> mask = {});
  static Interaction zero(std::size_t sites);

  std::size_t sites() const { return mask.size(); }
  bool is_zero() const;
  /// Throws DomainError unless degree is even, sizes agree and f_n >= 0 on the mask.
  void validate() const;
};

/// V(phi + shift) through :(phi + s)^j: = sum_k binom(j, k) :phi^k: s^{j-k}.
double potential_eval(const Interaction& V, const LatticeRegion& region,
                      const CovarianceMatrix& cov, const Vector& phi, const Vector& shift);

enum class Method { exact, quadrature, monte_carlo };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::exact:
      return "exact";
    case Method::quadrature:
      return "quadrature";
    case Method::monte_carlo:
      return "monte_carlo";
  }
  return "?";
}

struct FunctionalEstimate {
  double value = 0.0;
  double std_error = 0.0;  // zero unless method == monte_carlo
  std::size_t n_samples = 0;
  Method method = Method::exact;
  double exponent = 0.0;  // the Gaussian prefactor is exp(exponent)
  double expectation_ratio = 1.0;
};

struct EstimatorOptions {
  Method method = Method::monte_carlo;  // exact is chosen automatically for V = 0
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  int workers = 0;
  int gh_points = 40;  // per dimension, quadrature only
  double max_relative_error = 0.1;
};

/// E[e^{-V(phi + shift)}] / E[e^{-V(phi)}]. Monte Carlo uses common random
/// numbers and a delta-method standard error; quadrature is tensor
/// Gauss-Hermite in the whitened variables (at most 4 sites).
FunctionalEstimate expectation_ratio(const Interaction& V, const LatticeRegion& region,
                                     const CovarianceMatrix& cov, const Vector& shift,
                                     const EstimatorOptions& opt);

/// Probabilists' Gauss-Hermite rule (weights sum to 1) by Golub-Welsch.
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussHermite gauss_hermite(int n);

/// H_+ f at every lattice site.
Vector bulk_shift(const ModelParams& p, const LatticeRegion& region, const BoundaryFunction& f);

/// Orthonormal Hermite functions psi_k(x) = s^{-1/2} h_k(x / s), k < m, on
/// the boundary line (d = 1), with a Fourier quadrature grid that breaks at
/// `knots` and is refined geometrically toward kappa = 0.
class HermiteBasis {
 public:
  HermiteBasis(int d, int m, double scale = 1.0, std::vector<double> knots = {});

  int size() const { return m_; }
  double scale() const { return scale_; }

  /// A_kl = (psi_k, M psi_l) for the radial multiplier M(|k|).
  Matrix multiplier_matrix(const std::function<double(double)>& M) const;
  /// b_k = (psi_k, f).
  Vector coefficients(const BoundaryFunction& f) const;
  /// H_+ (sum_k b_k psi_k) at each site.
  Vector bulk_shift(const ModelParams& p, const LatticeRegion& region, const Vector& b) const;

 private:
  int m_;
  double scale_;
  std::vector<double> nodes_;    // Fourier nodes, kappa > 0 (the basis has definite parity)
  std::vector<double> weights_;  // quadrature weights
  Matrix psi_;                   // h-function values psi_k(kappa) at the nodes, node x basis
};

struct ProjectedPairing {
  int m = 0;
  double value = 0.0;  // (f, (p_m alpha_-^n p_m)^{-1} f)
  double condition_number = 0.0;
};

/// (f, (p_m alpha_-^n p_m)^{-1} f) with p_m the first m basis elements.
/// Throws FactorizationError if the projected matrix is singular.
ProjectedPairing projected_inverse_pairing(const ModelParams& p, const CutoffSpec& n,
                                           const BoundaryFunction& f, int m, double scale = 1.0);

/// Z_{m,n}(f)/Z_{m,n}(0) = exp(-(f, (p_m alpha_-^n p_m)^{-1} f)/2) E[e^{-V(phi + c H_+ p_m f)}]/E[e^{-V(phi)}].
FunctionalEstimate z_delta(const ModelParams& p, const LatticeRegion& region,
                           const CovarianceMatrix& cov, const Interaction& V,
                           const BoundaryFunction& f, int m, const CutoffSpec& n,
                           const EstimatorOptions& opt = {}, double scale = 1.0);

/// Z(f)/Z(0); (f, alpha_-^{-1} f) = -c^2 (f, alpha_+ f) from boundary_pairing(plus).
FunctionalEstimate z_ratio(const ModelParams& p, const LatticeRegion& region,
                           const CovarianceMatrix& cov, const Interaction& V,
                           const BoundaryFunction& f, const EstimatorOptions& opt = {});

/// Zt(f)/Zt(0); (alpha_+ f, f) from the Gamma-function closed form.
FunctionalEstimate ztilde_ratio(const ModelParams& p, const LatticeRegion& region,
                                const CovarianceMatrix& cov, const Interaction& V,
                                const BoundaryFunction& f, const EstimatorOptions& opt = {});

/// Free-field Zt(f)/Zt(0) at finite z: exp((raw(z) - corr(z)) / 2).
double ztilde_ratio_finite_z(const ModelParams& p, const BoundaryFunction& f, double z);

struct DualityGap {
  FunctionalEstimate z;
  FunctionalEstimate ztilde;
  double gap = 0.0;          // z.value - ztilde.value
  double combined_se = 0.0;  // hypot of the two standard errors
};

/// z_ratio(f) - ztilde_ratio(c f). Monte Carlo runs use independent streams.
DualityGap duality_gap(const ModelParams& p, const LatticeRegion& region,
                       const CovarianceMatrix& cov, const Interaction& V, const BoundaryFunction& f,
                       const EstimatorOptions& opt = {});

}  // namespace adscft
