#pragma once

// Reflection positivity of boundary generating functionals and conformal
// covariance of the plus-kernels under bulk isometries.

#include <functional>
#include <vector>

#include "adscft/boundary_function.hpp"
#include "adscft/errors.hpp"
#include "adscft/functionals.hpp"
#include "adscft/geometry.hpp"
#include "adscft/params.hpp"

namespace adscft {

/// Raised when a test function is not supported in the positive half-space.
class SupportError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Reflection theta: x_axis -> -x_axis, axis in 1..d.
struct ReflectionSpec {
  int axis = 1;

  /// Throws DomainError unless 1 <= axis <= d.
  void validate(int d) const;
  int index() const { return axis - 1; }
};

/// Minimum fraction of a test function's mass in {x_axis > 0}.
inline constexpr double kSupportMass = 1.0 - 1e-10;

using RPFunctional = std::function<FunctionalEstimate(const BoundaryFunction&)>;

struct RPMatrix {
  Matrix values;          // M_ij = functional(f_i + theta f_j)
  Matrix std_errors;      // entrywise standard errors (zero for exact functionals)
  double asymmetry = 0.0; // max |M - M^T|
  double norm = 0.0;      // spectral norm of the symmetrized matrix
  double min_eigenvalue = 0.0;
  double noise = 0.0;     // Frobenius norm of std_errors, bounds the eigenvalue shift
};

/// Assembles and diagonalizes the reflection matrix. Entries are evaluated on
/// `workers` threads (default 1); the functional must then be thread-safe.
/// Throws SupportError if some f_i carries less than kSupportMass in x_axis > 0.
RPMatrix rp_matrix(const RPFunctional& functional, const std::vector<BoundaryFunction>& fs,
                   const ReflectionSpec& spec, int workers = 1);

/// min_eigenvalue >= -max(tol * norm, 3 * noise).
bool rp_passes(const RPMatrix& m, double tol = 1e-8);

/// Free boundary functional f -> exp((alpha_+ f, f) / 2), exact.
RPFunctional free_ztilde_functional(const ModelParams& p);

/// Interacting Zt(f)/Zt(0) on a lattice region; all entries share `opt.seed`.
RPFunctional ztilde_functional(const ModelParams& p, const LatticeRegion& region,
                               const CovarianceMatrix& cov, const Interaction& V,
                               const EstimatorOptions& opt);

/// (theta f, alpha_+ f).
double reflection_form(const ModelParams& p, const BoundaryFunction& f, const ReflectionSpec& spec);

/// int conj((theta f)^(k)) |k|^{2j} f^(k) dk divided by int |f^(k)|^2 |k|^{2j} dk.
/// For integer j the kernel is a local differential operator, so the ratio
/// vanishes up to the overlap of f with its reflection.
double reflected_moment_ratio(const BoundaryFunction& f, const ReflectionSpec& spec, double j);

/// |H_+(g p; x') - J^{Delta_+/d} H_+(p; g^{-1} x')| / |H_+(g p; x')| with J the
/// Jacobian of g^{-1} at x'. Throws GeometryError if g^{-1} sends x' to infinity.
double intertwining_residual(const ModelParams& p, const Isometry& g, const BulkPoint& pt,
                             const BoundaryPoint& xp);

/// |alpha_+(g x, g y) - l(x)^{-Delta_+} l(y)^{-Delta_+} alpha_+(x, y)| / |alpha_+(g x, g y)|
/// with l = J^{1/d} the conformal factor of g. Throws DomainError if x = y.
double conformal_2pt_check(const ModelParams& p, const Isometry& g, const BoundaryPoint& x,
                           const BoundaryPoint& y);

}  // namespace adscft
