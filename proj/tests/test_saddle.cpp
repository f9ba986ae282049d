#include "doctest.h"

#include "phsurgery/saddle.hpp"
#include "phsurgery/sampling.hpp"

#include <cmath>

using namespace phsurgery;
using namespace phsurgery::saddle;

namespace {

Point vec(std::initializer_list<double> v) {
  Point p(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) p[i++] = x;
  return p;
}

double rel_err(const Point& a, const Point& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

// Grid-search oracle for the domination conditions, independent of pick_rho0.
bool dominated(double lambda, double mu, double lp, double mp, int k, bool volume, double rho0) {
  bool ok = std::pow(lp / mp, rho0) > std::max(lambda, 1.0 / mu);
  if (volume) ok = ok && lambda < std::pow(lp, rho0 / k) && std::pow(mp, rho0 / k) < mu;
  return ok;
}

}  // namespace

TEST_CASE("bump: values at the documented radii") {
  const double delta = 0.1;
  const BumpProfile p(delta, 0.5);
  CHECK(p(vec({delta / 2, 0.0})) == 0.5);
  CHECK(p(vec({0.0, 3 * delta})) == 1.0);
  // Annulus midpoint: S(1/2) = 1/2 by symmetry, ρ̄ = 0.5 + 0.5·0.5.
  CHECK(p(vec({1.5 * delta, 0.0})) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK_THROWS_AS(p(vec({0.8, 0.8})), DomainError);
}

TEST_CASE("bump: construction contract") {
  CHECK_THROWS_AS(BumpProfile(0.1, 0.4), DomainError);  // (1−ρ₀)·2 > 1
  CHECK_THROWS_AS(BumpProfile(0.0, 0.5), DomainError);
  CHECK_THROWS_AS(BumpProfile(0.1, 1.0), DomainError);
  CHECK_NOTHROW(BumpProfile(0.1, 0.5));
  CHECK_NOTHROW(BumpProfile(0.01, 0.9));
}

TEST_CASE("bump: slope bound, monotonicity and C2 smoothness on the annulus") {
  auto rng = sampling::make_rng(7);
  for (double rho0 : {0.5, 0.7}) {
    for (double delta : {0.1, 1e-3}) {
      const BumpProfile p(delta, rho0);
      for (int i = 0; i < 1000; ++i) {
        const double s = sampling::uniform(rng, delta, 2 * delta);
        const double d1 = p.radial_derivative(s);
        CHECK(d1 >= 0.0);
        CHECK(std::abs(d1) < 1.0 / delta);
      }
      // Second derivative: nested dual against a central difference of ρ̄'.
      for (int i = 0; i < 50; ++i) {
        const double s = sampling::uniform(rng, 1.05 * delta, 1.95 * delta);
        const D2 y(D1(s, 1.0), D1(1.0, 0.0));
        const double d2 = p.radial(y).eps.eps;
        const double h = 1e-5 * delta;
        const double fd = (p.radial_derivative(s + h) - p.radial_derivative(s - h)) / (2 * h);
        CHECK(d2 == doctest::Approx(fd).epsilon(1e-5).scale(1.0 / (delta * delta)));
      }
      // Flat ends: derivatives vanish at both boundary radii.
      CHECK(p.radial_derivative(delta) == 0.0);
      CHECK(std::abs(p.radial_derivative(2 * delta)) < 1e-12);
    }
  }
}

TEST_CASE("bump: transition slope supremum is attained at the midpoint") {
  double sup = 0.0;
  for (int i = 1; i < 20000; ++i) {
    const double r = i / 20000.0;
    sup = std::max(sup, BumpProfile::transition(seeded(r, 1.0)).eps);
  }
  CHECK(sup == doctest::Approx(BumpProfile::transition_slope_sup).epsilon(1e-8));
}

TEST_CASE("slow-down never speeds up the saddle") {
  const SaddleSpec spec({-1.0, -0.5, 1.0, 2.0});
  const BumpProfile p(0.1, 0.5);
  auto rng = sampling::make_rng(3);
  for (int i = 0; i < 1000; ++i) {
    const Point x = sampling::in_ball(rng, 4, 0.4);
    const double slow = slow_field(spec, p, x).norm();
    const double fast = spec.field(x).norm();
    CHECK(slow <= fast * (1 + 1e-15));
    if (x.norm() >= 0.2) CHECK(slow == fast);
  }
}

TEST_CASE("pick_rho0: documented configurations") {
  const double e = std::exp(1.0);
  auto c = pick_rho0(std::exp(-2.0), e * e, 1 / e, e, 4, false);
  CHECK(c.rho0 == doctest::Approx(0.5));
  CHECK(c.upper == doctest::Approx(1.0));
  // Neutral saddle: every ρ₀ in (0,1) is feasible.
  c = pick_rho0(std::exp(-2.0), e * e, 1.0, 1.0, 4, false);
  CHECK(c.upper == 1.0);
  CHECK(c.rho0 == 0.5);
}

TEST_CASE("pick_rho0: agrees with a grid search over rho0") {
  struct Case {
    double lambda, mu, lp, mp;
    int k;
    bool volume;
  };
  const Case cases[] = {
      {std::exp(-2.0), std::exp(2.0), std::exp(-1.0), std::exp(1.0), 4, true},
      {std::exp(-2.0), std::exp(2.0), std::exp(-1.0), std::exp(1.0), 4, false},
      {std::exp(-1.2), std::exp(1.5), std::exp(-1.0), std::exp(0.5), 2, true},
      {std::exp(-1.2), std::exp(1.5), std::exp(-1.0), std::exp(0.5), 1, false},
      {std::exp(-0.3), std::exp(0.4), std::exp(-0.2), std::exp(0.1), 3, true},
  };
  for (const auto& cs : cases) {
    const auto choice = pick_rho0(cs.lambda, cs.mu, cs.lp, cs.mp, cs.k, cs.volume);
    CHECK(dominated(cs.lambda, cs.mu, cs.lp, cs.mp, cs.k, cs.volume, choice.rho0));
    for (int g = 1; g <= 99; ++g) {
      const double r = g / 100.0;
      const bool feasible = dominated(cs.lambda, cs.mu, cs.lp, cs.mp, cs.k, cs.volume, r);
      if (r < choice.upper - 1e-12) CHECK(feasible);
      if (r > choice.upper + 1e-12) CHECK_FALSE(feasible);
    }
  }
  // (λ'/μ')^ρ₀ > e^{-1.2} with λ'/μ' = e^{-1.5} binds at 0.8.
  CHECK(pick_rho0(cases[2].lambda, cases[2].mu, cases[2].lp, cases[2].mp, 2, true).upper ==
        doctest::Approx(0.8));
}

TEST_CASE("pick_rho0: infeasible inputs name the violated inequality") {
  const double e = std::exp(1.0);
  CHECK_THROWS_WITH_AS(pick_rho0(1.2, e, 1.0, 1.0, 2, false), doctest::Contains("lambda < 1"), DomainError);
  CHECK_THROWS_WITH_AS(pick_rho0(0.1, 0.9, 1.0, 1.0, 2, false), doctest::Contains("mu > 1"), DomainError);
  CHECK_THROWS_WITH_AS(pick_rho0(0.5, 2.0, 0.4, 1.0, 2, false), doctest::Contains("lambda'"), DomainError);
  CHECK_THROWS_WITH_AS(pick_rho0(0.5, 2.0, 1.0, 2.0, 2, false), doctest::Contains("mu'"), DomainError);
}

TEST_CASE("flow_slow: closed forms") {
  const SaddleSpec spec({-1.0, 1.0});
  {
    const auto one = BumpProfile::uniform(1.0);
    const Point y = flow_slow(spec, one, vec({1e-2, 1e-3}), 1.0);
    CHECK(rel_err(y, vec({std::exp(-1.0) * 1e-2, std::exp(1.0) * 1e-3})) < 1e-12);
  }
  {
    // Orbit held inside the inner disk: a direct product with the slow saddle.
    const BumpProfile p(0.1, 0.5);
    const Point x = vec({0.01, 0.001});
    const double t = 1.0;
    const Point y = flow_slow(spec, p, x, t);
    CHECK(rel_err(y, spec.linear_flow(x, 0.5 * t)) < 1e-12);
  }
  CHECK_THROWS_AS(flow_slow(spec, BumpProfile::uniform(1.0), vec({0.0, 0.5}), 1.0), EscapeError);
  try {
    flow_slow(spec, BumpProfile::uniform(1.0), vec({0.0, 0.5}), 1.0);
  } catch (const EscapeError& e) {
    CHECK(e.escape_time() == doctest::Approx(std::log(2.0)).epsilon(2e-3));
  }
}

TEST_CASE("flow_slow: half-step Richardson agreement on annulus-crossing orbits") {
  const SaddleSpec spec({-1.0, -1.0, 1.0, 1.0});
  auto rng = sampling::make_rng(11);
  for (double delta : {0.1, 0.01}) {
    const BumpProfile p(delta, 0.5);
    for (int i = 0; i < 20; ++i) {
      const Point x = 0.5 * delta * sampling::unit_vector(rng, 4);
      const Point a = flow_slow(spec, p, x, 4.0, {1e-3});
      const Point b = flow_slow(spec, p, x, 4.0, {5e-4});
      CHECK(rel_err(a, b) < 1e-8);
    }
  }
}

TEST_CASE("variational_flow_slow: closed forms and finite-difference oracle") {
  const SaddleSpec spec({-1.0, -0.5, 1.0, 1.5});
  {
    const auto uni = BumpProfile::uniform(0.5);
    const auto r = variational_flow_slow(spec, uni, vec({0.01, 0.02, 0.01, 0.0}), 2.0);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        const double expect = i == j ? std::exp(0.5 * 2.0 * spec.rate(i)) : 0.0;
        CHECK(r.jacobian(i, j) == doctest::Approx(expect).epsilon(1e-12));
      }
    const auto r0 = variational_flow_slow(spec, uni, vec({0.01, 0.02, 0.01, 0.0}), 0.0);
    CHECK((r0.jacobian - Matrix::Identity(4, 4)).norm() == 0.0);
  }
  const BumpProfile p(0.1, 0.5);
  auto rng = sampling::make_rng(5);
  const double eps = 1e-6;
  for (int n = 0; n < 20; ++n) {
    const Point x = p.delta() * sampling::uniform(rng, 1.0, 2.0) * sampling::unit_vector(rng, 4);
    const auto r = variational_flow_slow(spec, p, x, 1.0);
    CHECK(r.jacobian.determinant() > 0.0);
    Matrix fd(4, 4);
    for (int i = 0; i < 4; ++i) {
      Point xp = x, xm = x;
      xp[i] += eps;
      xm[i] -= eps;
      fd.col(i) = (flow_slow(spec, p, xp, 1.0) - flow_slow(spec, p, xm, 1.0)) / (2 * eps);
    }
    CHECK((fd - r.jacobian).norm() / r.jacobian.norm() < 1e-5);
  }
}

TEST_CASE("shear form is bounded by the gradient estimate") {
  const SaddleSpec spec({-1.0, -1.0, 1.0, 1.0});
  auto rng = sampling::make_rng(13);
  for (double delta : {0.1, 1e-3}) {
    const BumpProfile p(delta, 0.5);
    for (int i = 0; i < 1000; ++i) {
      const Point x = delta * sampling::uniform(rng, 1.0, 2.0) * sampling::unit_vector(rng, 4);
      const Point v = sampling::unit_vector(rng, 4) * sampling::uniform(rng, 0.1, 3.0);
      const auto s = shear(spec, p, x, v);
      CHECK(s.form <= s.bound * (1 + 1e-12));
    }
  }
}

TEST_CASE("annulus_transit: exact transit times") {
  const double delta = 0.05;
  {
    const SaddleSpec spec({-1.0, 1.0});
    const auto slow = BumpProfile::uniform(0.5, delta);
    const auto r = annulus_transit(spec, slow, vec({0.0, delta}));
    CHECK(r.time == doctest::Approx(std::log(2.0) / 0.5).epsilon(1e-9));
    CHECK(classify(r) == TransitClass::inner_to_outer);
    CHECK(r.exit.norm() == doctest::Approx(2 * delta).epsilon(1e-9));
  }
  {
    const SaddleSpec spec({-1.0, 1.0});
    const auto one = BumpProfile::uniform(1.0, delta);
    const auto r = annulus_transit(spec, one, vec({2 * delta, 0.0}));
    CHECK(r.time == doctest::Approx(std::log(2.0)).epsilon(1e-9));
    CHECK(classify(r) == TransitClass::outer_to_inner);
  }
}

TEST_CASE("annulus_transit: entry validation") {
  const SaddleSpec spec({-1.0, 1.0});
  const BumpProfile p(0.1, 0.5);
  CHECK_THROWS_AS(annulus_transit(spec, p, vec({0.15, 0.0})), DomainError);
  CHECK_THROWS_AS(annulus_transit(spec, p, vec({0.1, 0.0})), DomainError);   // inward at inner sphere
  CHECK_THROWS_AS(annulus_transit(spec, p, vec({0.0, 0.2})), DomainError);   // outward at outer sphere
  CHECK_THROWS_AS(annulus_transit(spec, BumpProfile::uniform(1.0), vec({0.0, 0.1})), DomainError);
}

TEST_CASE("annulus_transit: exits lie on boundary spheres and obey the shear witness") {
  const SaddleSpec spec({-1.0, -1.0, 1.0, 1.0});
  const BumpProfile p(0.01, 0.5);
  const auto c = transit_campaign(spec, p, 200, 42);
  CHECK(c.transits.size() + c.excluded == 200);
  CHECK(c.witness_violations == 0);
  for (const auto& r : c.transits) {
    const double target = r.exit_sphere == Sphere::inner ? p.delta() : 2 * p.delta();
    CHECK(std::abs(r.exit.norm() - target) < 1e-9 * p.delta());
    CHECK(r.sigma_min > 0.0);
  }
  CHECK(c.counts[static_cast<int>(TransitClass::inner_to_outer)] > 0);
  CHECK(c.counts[static_cast<int>(TransitClass::outer_to_inner)] > 0);
  CHECK(c.counts[static_cast<int>(TransitClass::outer_to_outer)] > 0);
  // q = Σ rᵢxᵢ² is nondecreasing along orbits, so no orbit enters at the inner
  // sphere and leaves through it again.
  CHECK(c.counts[static_cast<int>(TransitClass::inner_to_inner)] == 0);
  CHECK(c.inner_probes > 0);
}

TEST_CASE("transit campaign: distortion is uniform across three decades of delta") {
  const SaddleSpec spec({-1.0, -1.0, 1.0, 1.0});
  double lo = 1e300, hi = 0.0;
  for (double delta : {1e-1, 1e-2, 1e-3}) {
    const auto c = transit_campaign(spec, BumpProfile(delta, 0.5), 100, 9);
    lo = std::min(lo, c.c5);
    hi = std::max(hi, c.c5);
  }
  CHECK(hi / lo < 2.0);
}
