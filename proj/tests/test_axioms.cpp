#include <cmath>
#include <random>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "doctest.h"

#include "adscft/axioms.hpp"
#include "adscft/propagators.hpp"

using namespace adscft;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) {
    out(i++) = e;
  }
  return out;
}

// Single bumps well inside x_1 > 0 (center / width >= 6.6).
BoundaryFunction positive_bump(int d, std::mt19937_64& rng, bool signed_weight = false) {
  std::uniform_real_distribution<double> c1(1.2, 3.0), cx(-1.0, 1.0), w(0.1, 0.18), a(0.2, 1.0);
  Vector c(d);
  c(0) = c1(rng);
  for (int i = 1; i < d; ++i) {
    c(i) = cx(rng);
  }
  double weight = a(rng);
  if (signed_weight && std::bernoulli_distribution(0.5)(rng)) {
    weight = -weight;
  }
  return BoundaryFunction::bump(c, w(rng), weight);
}

// Mixture of up to three positive-half-space bumps with signed weights.
BoundaryFunction positive_mixture(int d, std::mt19937_64& rng) {
  BoundaryFunction f = positive_bump(d, rng, true);
  const int extra = std::uniform_int_distribution<int>(0, 2)(rng);
  for (int i = 0; i < extra; ++i) {
    f = f + positive_bump(d, rng, true);
  }
  return f;
}

// Conformal factor of g at x from the null-cone action: g n(x) = n(g x) / l(x).
double null_cone_factor(const Isometry& g, const BoundaryPoint& x) {
  const int d = g.dim();
  Vector n(d + 2);
  n.head(d) = x;
  n(d) = 0.5 * (1.0 - x.squaredNorm());
  n(d + 1) = 0.5 * (1.0 + x.squaredNorm());
  const Vector image = g.matrix() * n;
  return 1.0 / (image(d) + image(d + 1));
}

// Random boundary points are redrawn where the conformal factor exceeds this:
// there the point sits within ~1e-3 of the pole and the half-space
// coordinates of its image lose digits to cancellation.
constexpr double kMaxFactor = 1e3;

}  // namespace

TEST_CASE("reflection spec") {
  CHECK_NOTHROW(ReflectionSpec{1}.validate(1));
  CHECK_NOTHROW(ReflectionSpec{2}.validate(2));
  CHECK_THROWS_AS(ReflectionSpec{0}.validate(2), DomainError);
  CHECK_THROWS_AS(ReflectionSpec{3}.validate(2), DomainError);
  CHECK(ReflectionSpec{2}.index() == 1);
}

TEST_CASE("free reflection matrices") {
  const auto p = ModelParams::from_nu(1, 0.3);
  const auto Y = free_ztilde_functional(p);

  SUBCASE("single function") {
    const auto f = BoundaryFunction::bump(vec({2.0}), 0.2);
    const auto m = rp_matrix(Y, {f}, ReflectionSpec{1});
    CHECK(m.values.rows() == 1);
    CHECK(m.values(0, 0) > 0.0);
    CHECK(m.values(0, 0) == doctest::Approx(std::exp(0.5 * alpha_plus_closed_form(
                                                               p, f + f.reflected(0)))));
  }

  SUBCASE("three bumps") {
    const std::vector<BoundaryFunction> fs = {BoundaryFunction::bump(vec({1.5}), 0.2, 1.0),
                                              BoundaryFunction::bump(vec({2.0}), 0.25, -0.7),
                                              BoundaryFunction::bump(vec({3.0}), 0.15, 0.4)};
    const auto m = rp_matrix(Y, fs, ReflectionSpec{1});
    CHECK(m.asymmetry <= 1e-12 * m.norm);
    CHECK(m.min_eigenvalue >= -1e-8 * m.norm);
    CHECK(m.noise == 0.0);
    CHECK(rp_passes(m));
  }

  SUBCASE("random families, d = 1 and 2") {
    std::mt19937_64 rng(11);
    for (int d : {1, 2}) {
      const auto pd = ModelParams::from_nu(d, d == 1 ? 0.3 : 0.7);
      for (int trial = 0; trial < (d == 1 ? 5 : 1); ++trial) {
        std::vector<BoundaryFunction> fs;
        for (int i = 0; i < 5; ++i) {
          fs.push_back(positive_mixture(d, rng));
        }
        const auto m = rp_matrix(free_ztilde_functional(pd), fs, ReflectionSpec{1});
        CHECK(m.min_eigenvalue >= -1e-8 * m.norm);
      }
    }
  }

  SUBCASE("parallel assembly matches serial") {
    std::mt19937_64 rng(5);
    std::vector<BoundaryFunction> fs;
    for (int i = 0; i < 4; ++i) {
      fs.push_back(positive_mixture(1, rng));
    }
    const auto a = rp_matrix(Y, fs, ReflectionSpec{1}, 1);
    const auto b = rp_matrix(Y, fs, ReflectionSpec{1}, 3);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("support violations") {
    CHECK_THROWS_AS(rp_matrix(Y, {BoundaryFunction::bump(vec({0.5}), 0.2)}, ReflectionSpec{1}),
                    SupportError);
    CHECK_THROWS_AS(rp_matrix(Y, {BoundaryFunction::bump(vec({-2.0}), 0.2)}, ReflectionSpec{1}),
                    SupportError);
    CHECK_THROWS_AS(rp_matrix(Y, {}, ReflectionSpec{1}), DomainError);
    CHECK_THROWS_AS(rp_matrix(Y, {BoundaryFunction::bump(vec({2.0}), 0.2)}, ReflectionSpec{2}),
                    DomainError);
  }
}

TEST_CASE("reflection quadratic form of the plus kernel") {
  std::mt19937_64 rng(29);
  for (int d : {1, 2}) {
    const auto p = ModelParams::from_nu(d, d == 1 ? 0.3 : 0.7);
    for (int trial = 0; trial < 25; ++trial) {
      const auto f = positive_mixture(d, rng);
      const double form = reflection_form(p, f, ReflectionSpec{1});
      // Disjoint supports: the pairing is the plain integral of a positive kernel
      // against f(x) f(theta y), so it is >= 0 up to quadrature error.
      CHECK(form >= -1e-12 * std::abs(boundary_pairing(p, KernelSign::plus, f, f).value));
    }
  }
}

TEST_CASE("reflected moment pairings") {
  // d = 1 single bump: ratio = int e^{-s^2 k^2} k^{2j} cos(2 c k) dk / int e^{-s^2 k^2} k^{2j} dk.
  auto oracle = [](double c, double s, double j) {
    boost::math::quadrature::exp_sinh<double> es;
    boost::math::quadrature::tanh_sinh<double> ts;
    auto g = [&](double k) {
      const double e = std::exp(-s * s * k * k);
      return e == 0.0 ? 0.0 : e * std::pow(k, 2.0 * j);
    };
    const double top = 40.0 / s;
    const double num = ts.integrate([&](double k) { return g(k) * std::cos(2.0 * c * k); }, 0.0, top);
    return num / es.integrate(g);
  };
  for (double j : {0.3, 1.0, 1.5}) {
    const auto f = BoundaryFunction::bump(vec({0.6}), 0.5);
    CHECK(reflected_moment_ratio(f, ReflectionSpec{1}, j) ==
          doctest::Approx(oracle(0.6, 0.5, j)).epsilon(1e-8));
  }

  SUBCASE("local kernels vanish off the hyperplane") {
    for (int d : {1, 2}) {
      Vector c = Vector::Zero(d);
      c(0) = 2.0;
      const auto f = BoundaryFunction::bump(c, 0.25, 1.0) + BoundaryFunction::bump(c * 1.3, 0.2, -0.5);
      for (double j : {1.0, 2.0, 3.0}) {
        CHECK(std::abs(reflected_moment_ratio(f, ReflectionSpec{1}, j)) <= 1e-10);
      }
      // A fractional power is nonlocal and does not vanish.
      CHECK(std::abs(reflected_moment_ratio(f, ReflectionSpec{1}, 0.3)) > 1e-4);
    }
  }
  CHECK_THROWS_AS(reflected_moment_ratio(BoundaryFunction::bump(vec({1.0}), 0.3),
                                         ReflectionSpec{1}, -1.0),
                  DomainError);
}

TEST_CASE("interacting reflection matrix by Monte Carlo") {
  const auto p = ModelParams::from_nu(1, 0.3);
  const auto region = LatticeRegion::uniform(1, {1.0, 2.2}, {{-1.0, 1.0}}, {4, 6});
  const auto cov = build_covariance(region, p);
  const auto V = Interaction::uniform(region.size(), {0.0, 0.0, 0.1, 0.0, 0.5});
  EstimatorOptions opt;
  opt.samples = 20000;
  opt.seed = 3;
  const std::vector<BoundaryFunction> fs = {BoundaryFunction::bump(vec({0.5}), 0.07, 1.0),
                                            BoundaryFunction::bump(vec({0.8}), 0.1, -0.6),
                                            BoundaryFunction::bump(vec({1.2}), 0.15, 0.8)};
  const auto m = rp_matrix(ztilde_functional(p, region, cov, V, opt), fs, ReflectionSpec{1});
  CHECK(m.noise > 0.0);
  CHECK(m.asymmetry <= 3.0 * m.noise);
  CHECK(m.min_eigenvalue >= -3.0 * m.noise);
  CHECK(rp_passes(m));
}

TEST_CASE("intertwining of the bulk-to-boundary propagator") {
  std::mt19937_64 rng(17);
  for (int d : {1, 2}) {
    const auto p = ModelParams::from_nu(d, d == 1 ? 0.3 : 0.7);
    Vector x0 = Vector::Zero(d);
    const BulkPoint pt(1.3, x0);
    Vector xp = Vector::Constant(d, 0.4);

    CHECK(intertwining_residual(p, Isometry::identity(d), pt, xp) <= 1e-13);
    CHECK(intertwining_residual(p, Isometry::translation(Vector::Constant(d, 0.7)), pt, xp) <=
          1e-12);

    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
      const auto iso = Isometry::random(d, rng);
      BulkPoint q(std::exp(0.5 * g(rng)), Vector::Zero(d));
      Vector y(d);
      do {
        for (int i = 0; i < d; ++i) {
          q.x(i) = g(rng);
          y(i) = g(rng);
        }
      } while (null_cone_factor(iso.inverse(), y) > kMaxFactor);
      CHECK(intertwining_residual(p, iso, q, y) <= 1e-8);

      // Oracle: exact boundary map and null-cone conformal factor.
      const auto inv = iso.inverse();
      const double jac = std::pow(null_cone_factor(inv, y), d);
      const double lhs = bulk_to_boundary(p, KernelSign::plus, apply_isometry(iso, q), y);
      const double rhs = std::pow(jac, p.delta_plus / d) *
                         bulk_to_boundary(p, KernelSign::plus, q, boundary_map_exact(inv, y));
      CHECK(std::abs(lhs / rhs - 1.0) <= 1e-10);
    }

    const auto g1 = Isometry::random(d, rng);
    const auto g2 = Isometry::random(d, rng);
    CHECK(intertwining_residual(p, g1 * g2, pt, xp) <=
          intertwining_residual(p, g1, pt, xp) + intertwining_residual(p, g2, pt, xp) + 1e-8);
  }
  CHECK_THROWS_AS(intertwining_residual(ModelParams::from_nu(2, 0.7), Isometry::inversion(2),
                                        BulkPoint(1.0, Vector::Zero(2)), Vector::Zero(2)),
                  GeometryError);
}

TEST_CASE("conformal two-point covariance") {
  std::mt19937_64 rng(23);
  for (int d : {1, 2}) {
    const auto p = ModelParams::from_nu(d, d == 1 ? 0.3 : 0.7);
    Vector x = Vector::Constant(d, 0.3);
    Vector y = Vector::Constant(d, -0.5);
    y(0) = 1.1;
    if (d == 2) {
      CHECK(conformal_2pt_check(p, Isometry::rotation(2, 0, 1, 0.9), x, y) <= 1e-12);
    }
    CHECK(conformal_2pt_check(p, Isometry::dilation(d, 0.7), x, y) <= 1e-12);
    CHECK(conformal_2pt_check(p, Isometry::translation(Vector::Constant(d, 2.0)), x, y) <= 1e-11);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
      const auto iso = Isometry::random(d, rng);
      Vector a(d), b(d);
      do {
        for (int i = 0; i < d; ++i) {
          a(i) = g(rng);
          b(i) = g(rng);
        }
      } while (null_cone_factor(iso, a) > kMaxFactor || null_cone_factor(iso, b) > kMaxFactor);
      CHECK(conformal_2pt_check(p, iso, a, b) <= 1e-8);
    }
    CHECK_THROWS_AS(conformal_2pt_check(p, Isometry::identity(d), x, x), DomainError);
  }
  CHECK_THROWS_AS(conformal_2pt_check(ModelParams::from_nu(1, 0.3), Isometry::inversion(1),
                                      vec({0.0}), vec({1.0})),
                  GeometryError);
}
