#include "adscft/axioms.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "adscft/parallel.hpp"
#include "adscft/propagators.hpp"
#include "adscft/regularization.hpp"

namespace adscft {

void ReflectionSpec::validate(int d) const {
  if (axis < 1 || axis > d) {
    throw DomainError("ReflectionSpec: axis must be in 1.." + std::to_string(d) + ", got " +
                      std::to_string(axis));
  }
}

RPMatrix rp_matrix(const RPFunctional& functional, const std::vector<BoundaryFunction>& fs,
                   const ReflectionSpec& spec, int workers) {
  if (fs.empty()) {
    throw DomainError("rp_matrix: need at least one test function");
  }
  const int d = fs.front().dim();
  spec.validate(d);
  std::vector<BoundaryFunction> reflected;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    if (fs[i].dim() != d) {
      throw DomainError("rp_matrix: test functions of different dimension");
    }
    const double mass = fs[i].halfspace_mass(spec.index(), +1);
    if (mass < kSupportMass) {
      throw SupportError("rp_matrix: f_" + std::to_string(i) + " has only " +
                         std::to_string(mass) + " of its mass in x_" + std::to_string(spec.axis) +
                         " > 0");
    }
    reflected.push_back(fs[i].reflected(spec.index()));
  }

  const auto n = static_cast<Eigen::Index>(fs.size());
  RPMatrix out;
  out.values.resize(n, n);
  out.std_errors.resize(n, n);
  parallel_blocks(static_cast<std::size_t>(n * n), workers < 1 ? 1 : workers, [&](std::size_t t) {
    const auto i = static_cast<Eigen::Index>(t) / n;
    const auto j = static_cast<Eigen::Index>(t) % n;
    const FunctionalEstimate e =
        functional(fs[static_cast<std::size_t>(i)] + reflected[static_cast<std::size_t>(j)]);
    out.values(i, j) = e.value;
    out.std_errors(i, j) = e.std_error;
  });

  out.asymmetry = (out.values - out.values.transpose()).cwiseAbs().maxCoeff();
  const Matrix sym = 0.5 * (out.values + out.values.transpose());
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  out.min_eigenvalue = eig.eigenvalues().minCoeff();
  out.norm = eig.eigenvalues().cwiseAbs().maxCoeff();
  out.noise = out.std_errors.norm();
  return out;
}

bool rp_passes(const RPMatrix& m, double tol) {
  return m.min_eigenvalue >= -std::max(tol * m.norm, 3.0 * m.noise);
}

RPFunctional free_ztilde_functional(const ModelParams& p) {
  return [p](const BoundaryFunction& f) {
    FunctionalEstimate e;
    e.exponent = 0.5 * alpha_plus_closed_form(p, f);
    e.value = std::exp(e.exponent);
    return e;
  };
}

RPFunctional ztilde_functional(const ModelParams& p, const LatticeRegion& region,
                               const CovarianceMatrix& cov, const Interaction& V,
                               const EstimatorOptions& opt) {
  return [&p, &region, &cov, &V, opt](const BoundaryFunction& f) {
    return ztilde_ratio(p, region, cov, V, f, opt);
  };
}

double reflection_form(const ModelParams& p, const BoundaryFunction& f,
                       const ReflectionSpec& spec) {
  spec.validate(f.dim());
  return boundary_pairing(p, KernelSign::plus, f.reflected(spec.index()), f).value;
}

double reflected_moment_ratio(const BoundaryFunction& f, const ReflectionSpec& spec, double j) {
  spec.validate(f.dim());
  if (j < 0.0) {
    throw DomainError("reflected_moment_ratio: need j >= 0");
  }
  const double cross =
      radial_pairing(f.reflected(spec.index()), f, [j](double k) { return std::pow(k, 2.0 * j); })
          .value;
  return cross / spectral_moment(f, j);
}

double intertwining_residual(const ModelParams& p, const Isometry& g, const BulkPoint& pt,
                             const BoundaryPoint& xp) {
  const BoundaryAction inv = boundary_action(g.inverse(), xp);
  const double lhs = bulk_to_boundary(p, KernelSign::plus, apply_isometry(g, pt), xp);
  const double rhs = std::pow(inv.jac, p.delta_plus / p.d) *
                     bulk_to_boundary(p, KernelSign::plus, pt, inv.point);
  return std::abs(lhs - rhs) / std::abs(lhs);
}

double conformal_2pt_check(const ModelParams& p, const Isometry& g, const BoundaryPoint& x,
                           const BoundaryPoint& y) {
  if ((x - y).norm() == 0.0) {
    throw DomainError("conformal_2pt_check: coincident points");
  }
  const BoundaryAction gx = boundary_action(g, x);
  const BoundaryAction gy = boundary_action(g, y);
  const double lhs = boundary_kernel(p, KernelSign::plus, gx.point, gy.point);
  const double weight = -p.delta_plus / p.d;
  const double rhs =
      std::pow(gx.jac, weight) * std::pow(gy.jac, weight) * boundary_kernel(p, KernelSign::plus, x, y);
  return std::abs(lhs - rhs) / std::abs(lhs);
}

}  // namespace adscft
