#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "doctest.h"

#include "adscft/functionals.hpp"
#include "adscft/propagators.hpp"

using namespace adscft;

namespace {

const ModelParams kP = ModelParams::from_nu(1, 0.3);

BoundaryFunction unit_bump(double width = 1.0, double weight = 1.0) {
  return BoundaryFunction::bump(Vector::Zero(1), width, weight);
}

struct Small {
  LatticeRegion region;
  CovarianceMatrix cov;
};

Small three_site() {
  auto region = LatticeRegion::uniform(1, {1.0, 1.9}, {{-0.45, 0.45}}, {3, 1});
  auto cov = build_covariance(region, kP);
  return {std::move(region), std::move(cov)};
}

Small thirty_site() {
  auto region = LatticeRegion::uniform(1, {0.8, 2.3}, {{-0.6, 0.6}}, {6, 5});
  auto cov = build_covariance(region, kP);
  return {std::move(region), std::move(cov)};
}

EstimatorOptions quadrature(int points = 40) {
  EstimatorOptions o;
  o.method = Method::quadrature;
  o.gh_points = points;
  return o;
}

EstimatorOptions monte_carlo(std::size_t samples, std::uint64_t seed = 7) {
  EstimatorOptions o;
  o.samples = samples;
  o.seed = seed;
  return o;
}

// Probabilists' Hermite polynomial He_k at x.
double he(int k, double x) {
  double a = 1.0, b = x;
  if (k == 0) {
    return a;
  }
  for (int j = 1; j < k; ++j) {
    const double c = x * b - j * a;
    a = b;
    b = c;
  }
  return b;
}

}  // namespace

TEST_CASE("interaction validation") {
  CHECK_THROWS_AS(Interaction::uniform(3, {0.0, 0.0, 0.0, 1.0}), DomainError);
  CHECK_THROWS_AS(Interaction::uniform(3, {0.0, 0.0, -1.0}), DomainError);
  CHECK_THROWS_AS(Interaction::uniform(3, {}), DomainError);
  CHECK_THROWS_AS(Interaction::uniform(3, {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1.0}), DomainError);
  auto V = Interaction::uniform(3, {0.0, 0.0, 1.0});
  V.mask.pop_back();
  CHECK_THROWS_AS(V.validate(), DomainError);
  // A negative leading coefficient is allowed off the mask.
  auto W = Interaction::uniform(2, {0.0, 0.0, 1.0}, {true, false});
  W.coeffs[2](1) = -1.0;
  CHECK_NOTHROW(W.validate());
  CHECK(Interaction::zero(4).is_zero());
  CHECK(Interaction::uniform(2, {0.0, 0.0, 1.0}, {false, false}).is_zero());
  CHECK_FALSE(Interaction::uniform(2, {0.0, 0.0, 1.0}).is_zero());
}

TEST_CASE("potential evaluation") {
  const auto s = three_site();
  const auto n = static_cast<Eigen::Index>(s.region.size());
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Vector phi(n), shift(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    phi(i) = g(rng);
    shift(i) = 0.3 * g(rng);
  }

  CHECK(potential_eval(Interaction::zero(3), s.region, s.cov, phi, shift) == 0.0);

  SUBCASE("mass term is the Wick square") {
    const auto V = Interaction::uniform(3, {0.0, 0.0, 1.0});
    double expect = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      expect += s.region.vol_weights[static_cast<std::size_t>(i)] * (phi(i) * phi(i) - s.cov.C(i, i));
    }
    CHECK(potential_eval(V, s.region, s.cov, phi, Vector::Zero(n)) ==
          doctest::Approx(expect).epsilon(1e-14));
  }

  SUBCASE("binomial shift matches direct Wick power of the shifted field") {
    const std::vector<double> a = {0.2, -0.4, 0.1, 0.3, 0.5, -0.2, 0.7};
    const auto V = Interaction::uniform(3, a);
    double expect = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sd = std::sqrt(s.cov.C(i, i));
      const double y = (phi(i) + shift(i)) / sd;
      double site = 0.0;
      for (std::size_t j = 0; j < a.size(); ++j) {
        site += a[j] * std::pow(sd, static_cast<double>(j)) * he(static_cast<int>(j), y);
      }
      expect += s.region.vol_weights[static_cast<std::size_t>(i)] * site;
    }
    const double got = potential_eval(V, s.region, s.cov, phi, shift);
    CHECK(std::abs(got - expect) <= 1e-12 * std::max(1.0, std::abs(expect)));
  }

  SUBCASE("mask removes sites") {
    const auto V = Interaction::uniform(3, {1.0, 0.0, 1.0}, {false, true, false});
    const double w = s.region.vol_weights[1];
    CHECK(potential_eval(V, s.region, s.cov, phi, Vector::Zero(n)) ==
          doctest::Approx(w * (1.0 + phi(1) * phi(1) - s.cov.C(1, 1))));
  }

  CHECK_THROWS_AS(potential_eval(Interaction::zero(2), s.region, s.cov, phi, shift), DomainError);
}

TEST_CASE("Gauss-Hermite moments") {
  const auto gh = gauss_hermite(12);
  double sum = 0.0;
  for (double w : gh.weights) {
    sum += w;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  double dfact = 1.0;
  for (int k = 1; 2 * k <= 22; ++k) {
    dfact *= 2 * k - 1;
    double m = 0.0, odd = 0.0;
    for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
      m += gh.weights[i] * std::pow(gh.nodes[i], 2 * k);
      odd += gh.weights[i] * std::pow(gh.nodes[i], 2 * k - 1);
    }
    CHECK(m == doctest::Approx(dfact).epsilon(1e-11));
    CHECK(std::abs(odd) <= 1e-10 * dfact);
  }
  CHECK_THROWS_AS(gauss_hermite(0), DomainError);
}

TEST_CASE("free-field functionals are Gaussian") {
  const auto s = three_site();
  const auto f = unit_bump();
  const auto V = Interaction::zero(s.region.size());
  const double plus = boundary_pairing(kP, KernelSign::plus, f, f).value;

  const auto z = z_ratio(kP, s.region, s.cov, V, f);
  CHECK(z.method == Method::exact);
  CHECK(z.value == doctest::Approx(std::exp(0.5 * kP.c * kP.c * plus)).epsilon(1e-14));
  CHECK(z.std_error == 0.0);

  const auto zt = ztilde_ratio(kP, s.region, s.cov, V, f);
  CHECK(zt.value == doctest::Approx(std::exp(0.5 * alpha_plus_closed_form(kP, f))).epsilon(1e-14));
  CHECK(std::abs(zt.exponent - 0.5 * plus) <= 1e-12 * std::abs(plus));

  const auto zero_f = unit_bump(1.0, 0.0);
  CHECK(z_ratio(kP, s.region, s.cov, V, zero_f).value == 1.0);
  const auto Vq = Interaction::uniform(s.region.size(), {0.0, 0.0, 0.1, 0.0, 0.5});
  CHECK(z_ratio(kP, s.region, s.cov, Vq, zero_f, monte_carlo(5000)).value == 1.0);

  SUBCASE("ztilde exponent scales quadratically") {
    for (double c : {0.5, 2.0, -3.0}) {
      const auto zc = ztilde_ratio(kP, s.region, s.cov, V, f.scaled(c));
      CHECK(zc.exponent == doctest::Approx(c * c * zt.exponent).epsilon(1e-12));
    }
  }

  SUBCASE("duality without interaction") {
    const auto g = duality_gap(kP, s.region, s.cov, V, f);
    CHECK(std::abs(g.gap) <= 1e-12 * g.z.value);
    CHECK(g.combined_se == 0.0);
  }
}

TEST_CASE("finite-z free functional approaches its limit") {
  const auto f = unit_bump();
  const double limit = std::exp(0.5 * alpha_plus_closed_form(kP, f));
  const double at = ztilde_ratio_finite_z(kP, f, 1e-2);
  CHECK(std::abs(at / limit - 1.0) <= 1e-2);
  const double closer = ztilde_ratio_finite_z(kP, f, 1e-3);
  CHECK(std::abs(closer / limit - 1.0) < std::abs(at / limit - 1.0));
}

TEST_CASE("interacting duality by quadrature") {
  const auto s = three_site();
  const auto f = BoundaryFunction::bump(Vector::Zero(1), 0.5, 1.0);
  const auto V = Interaction::uniform(s.region.size(), {0.0, 0.0, 0.1, 0.0, 0.5});
  const auto g = duality_gap(kP, s.region, s.cov, V, f, quadrature(40));
  CHECK(g.z.method == Method::quadrature);
  CHECK(std::abs(g.gap) <= 1e-10 * g.z.value);
  CHECK(g.z.expectation_ratio != doctest::Approx(1.0).epsilon(1e-6));

  const auto finer = z_ratio(kP, s.region, s.cov, V, f, quadrature(56));
  CHECK(finer.value == doctest::Approx(g.z.value).epsilon(1e-10));

  SUBCASE("Monte Carlo agrees within three standard errors") {
    const auto mc = z_ratio(kP, s.region, s.cov, V, f, monte_carlo(200000));
    CHECK(mc.method == Method::monte_carlo);
    CHECK(std::abs(mc.value - g.z.value) <= 3.0 * mc.std_error);
  }

  auto big = thirty_site();
  const auto Vbig = Interaction::uniform(big.region.size(), {0.0, 0.0, 0.1, 0.0, 0.5});
  CHECK_THROWS_AS(z_ratio(kP, big.region, big.cov, Vbig, f, quadrature()), DomainError);
}

TEST_CASE("interacting duality by Monte Carlo") {
  const auto s = thirty_site();
  const auto f = BoundaryFunction::bump(Vector::Zero(1), 0.5, 1.0);
  const auto V = Interaction::uniform(s.region.size(), {0.0, 0.0, 0.1, 0.0, 0.5});
  const auto g = duality_gap(kP, s.region, s.cov, V, f, monte_carlo(100000));
  CHECK(g.combined_se > 0.0);
  CHECK(std::abs(g.gap) <= 3.0 * g.combined_se);
  // Independent streams: the two estimates are not bitwise equal.
  CHECK(g.z.expectation_ratio != g.ztilde.expectation_ratio);
}

TEST_CASE("Monte Carlo error scaling, determinism and rejection") {
  const auto s = thirty_site();
  const auto f = BoundaryFunction::bump(Vector::Zero(1), 0.5, 1.0);
  const auto V = Interaction::uniform(s.region.size(), {0.0, 0.0, 0.1, 0.0, 0.5});
  const Vector shift = kP.c * bulk_shift(kP, s.region, f);

  const auto a = expectation_ratio(V, s.region, s.cov, shift, monte_carlo(20000));
  const auto b = expectation_ratio(V, s.region, s.cov, shift, monte_carlo(80000));
  const double slope = std::log(b.std_error / a.std_error) / std::log(4.0);
  CHECK(slope == doctest::Approx(-0.5).epsilon(0.2));

  auto one = monte_carlo(10000);
  one.workers = 1;
  auto three = one;
  three.workers = 3;
  const auto r1 = expectation_ratio(V, s.region, s.cov, shift, one);
  const auto r3 = expectation_ratio(V, s.region, s.cov, shift, three);
  CHECK(r1.value == r3.value);
  CHECK(r1.std_error == r3.std_error);

  auto strict = monte_carlo(1000);
  strict.max_relative_error = 1e-9;
  CHECK_THROWS_AS(expectation_ratio(V, s.region, s.cov, shift, strict), EstimationError);
  CHECK_THROWS_AS(expectation_ratio(V, s.region, s.cov, shift, monte_carlo(1)), DomainError);
}

TEST_CASE("Hermite basis") {
  CHECK_THROWS_AS(HermiteBasis(2, 4), DomainError);
  CHECK_THROWS_AS(HermiteBasis(1, 0), DomainError);

  SUBCASE("orthonormal under the unit multiplier") {
    for (double scale : {1.0, 0.5}) {
      const HermiteBasis basis(1, 24, scale, {1e-3, 1e3});
      const Matrix A = basis.multiplier_matrix([](double) { return 1.0; });
      CHECK((A - Matrix::Identity(24, 24)).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  SUBCASE("Gaussian bump is the ground state") {
    const HermiteBasis basis(1, 6);
    const Vector b = basis.coefficients(unit_bump());
    CHECK(b(0) == doctest::Approx(std::pow(std::numbers::pi, 0.25)).epsilon(1e-12));
    CHECK(b.tail(5).cwiseAbs().maxCoeff() <= 1e-12);

    const auto region = LatticeRegion::uniform(1, {0.5, 2.0}, {{-1.5, 1.5}}, {3, 4});
    const Vector direct = bulk_shift(kP, region, unit_bump());
    const Vector via = basis.bulk_shift(kP, region, b);
    CHECK((via - direct).cwiseAbs().maxCoeff() <= 1e-8 * direct.cwiseAbs().maxCoeff());
  }

  SUBCASE("off-centre bump converges in the basis") {
    const auto f = BoundaryFunction::bump(Vector::Constant(1, 0.4), 0.7, 1.3);
    const auto region = LatticeRegion::uniform(1, {0.6, 1.6}, {{-1.0, 1.0}}, {2, 3});
    const Vector direct = bulk_shift(kP, region, f);
    const HermiteBasis basis(1, 40);
    const Vector via = basis.bulk_shift(kP, region, basis.coefficients(f));
    CHECK((via - direct).cwiseAbs().maxCoeff() <= 1e-6 * direct.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("projected inverse pairing and the cutoff functional") {
  const auto f = unit_bump();
  const CutoffSpec n(1000);
  const double target = -kP.c * kP.c * boundary_pairing(kP, KernelSign::plus, f, f).value;

  double prev = -1e300;
  double prev_step = 1e300;
  double last = 0.0;
  for (int m : {4, 8, 16, 32, 64}) {
    const auto q = projected_inverse_pairing(kP, n, f, m);
    CHECK(q.value >= prev);
    if (prev > -1e300) {
      CHECK(q.value - prev < prev_step);
      prev_step = q.value - prev;
    }
    prev = q.value;
    last = q.value;
  }
  CHECK(std::abs(last / target - 1.0) <= 1e-2);

  const auto s = three_site();
  const auto V0 = Interaction::zero(s.region.size());
  const auto zd = z_delta(kP, s.region, s.cov, V0, f, 16, n);
  CHECK(zd.method == Method::exact);
  CHECK(zd.value == doctest::Approx(std::exp(-0.5 * projected_inverse_pairing(kP, n, f, 16).value))
                        .epsilon(1e-14));

  const auto Vq = Interaction::uniform(s.region.size(), {0.0, 0.0, 0.1, 0.0, 0.5});
  const auto fn = BoundaryFunction::bump(Vector::Zero(1), 0.5, 1.0);
  const auto zq = z_delta(kP, s.region, s.cov, Vq, fn, 48, n, quadrature(), 0.5);
  const auto zr = z_ratio(kP, s.region, s.cov, Vq, fn, quadrature());
  CHECK(zq.expectation_ratio == doctest::Approx(zr.expectation_ratio).epsilon(1e-6));
}
