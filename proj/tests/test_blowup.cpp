#include "doctest.h"

#include "phsurgery/blowup.hpp"
#include "phsurgery/sampling.hpp"

#include <cmath>

using namespace phsurgery;
using namespace phsurgery::blowup;
using saddle::BumpProfile;
using saddle::SaddleSpec;

namespace {

Point vec(std::initializer_list<double> v) {
  Point p(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) p[i++] = x;
  return p;
}

// Central-difference Jacobian, independent of the dual-number machinery.
template <typename F>
Matrix numeric_jacobian(F&& f, const Point& u, double h = 1e-6) {
  const int k = static_cast<int>(u.size());
  const Point f0 = f(u);
  Matrix j(f0.size(), k);
  for (int c = 0; c < k; ++c) {
    Point a = u, b = u;
    a[c] += h;
    b[c] -= h;
    j.col(c) = (f(a) - f(b)) / (2 * h);
  }
  return j;
}

BlowupPoint random_chart_point(sampling::Rng& rng, int k, double radius) {
  Point x;
  do {
    x = sampling::in_ball(rng, k, radius);
  } while (x.norm() < 1e-3 * radius);
  return lift(x);
}

}  // namespace

TEST_CASE("blowdown: chart formula and exceptional set") {
  const Point x = blowdown({0, vec({0.1, 0.5})});
  CHECK(x[0] == doctest::Approx(0.1));
  CHECK(x[1] == doctest::Approx(0.05));
  CHECK(blowdown({1, vec({3.0, 0.0, -2.0})}).norm() == 0.0);
  CHECK_THROWS_AS(blowdown({2, vec({0.1, 0.2})}), DomainError);
}

TEST_CASE("lift: dominant chart, tie rule and round trips") {
  auto p = lift(vec({0.3, 0.1}));
  CHECK(p.chart == 0);
  CHECK(p.u[0] == doctest::Approx(0.3));
  CHECK(p.u[1] == doctest::Approx(1.0 / 3));
  CHECK(lift(vec({0.1, 0.1})).chart == 0);
  CHECK(lift(vec({-0.1, 0.1})).chart == 0);
  CHECK_THROWS_AS(lift(vec({0.0, 0.0})), DomainError);

  auto rng = sampling::make_rng(1);
  for (int n = 0; n < 1000; ++n) {
    const int k = 2 + n % 4;
    const Point x = sampling::in_ball(rng, k, 0.9);
    const BlowupPoint q = lift(x);
    CHECK((blowdown(q) - x).norm() < 1e-14);
    CHECK(line(q).cwiseAbs().maxCoeff() <= 1.0);
    const BlowupPoint back = lift(blowdown(q));
    CHECK(back.chart == q.chart);
    CHECK((back.u - q.u).norm() < 1e-12);
  }
}

TEST_CASE("chart_transition") {
  const BlowupPoint p{0, vec({0.1, 0.5})};
  const BlowupPoint q = chart_transition(p, 1);
  CHECK(q.chart == 1);
  CHECK(q.u[0] == doctest::Approx(2.0));
  CHECK(q.u[1] == doctest::Approx(0.05));
  CHECK((blowdown(q) - blowdown(p)).norm() < 1e-15);
  CHECK((chart_transition(p, 0).u - p.u).norm() == 0.0);
  CHECK_THROWS_AS(chart_transition({0, vec({0.1, 0.0})}, 1), DomainError);

  auto rng = sampling::make_rng(2);
  for (int n = 0; n < 1000; ++n) {
    const BlowupPoint a = random_chart_point(rng, 3, 0.9);
    const int target = (a.chart + 1 + n % 2) % 3;
    const BlowupPoint b = chart_transition(a, target);
    const BlowupPoint c = chart_transition(b, a.chart);
    CHECK((blowdown(b) - blowdown(a)).norm() < 1e-14);
    CHECK((c.u - a.u).norm() < 1e-12 * std::max(1.0, a.u.norm()));
  }
  // Exceptional points move between charts along their line.
  const BlowupPoint e{0, vec({0.0, 0.5, -1.5})};
  const BlowupPoint e2 = chart_transition(e, 2);
  CHECK(e2.exceptional());
  CHECK((line(e2) - line(e) / -1.5).norm() < 1e-15);
}

TEST_CASE("pullback density equals the chart Jacobian determinant") {
  CHECK(pullback_volume_density({0, vec({0.1, 0.3, -0.2})}) == doctest::Approx(0.01));
  CHECK(pullback_volume_density({1, vec({0.4, 0.0, 0.7})}) == 0.0);
  auto rng = sampling::make_rng(3);
  for (int n = 0; n < 500; ++n) {
    const int k = 2 + n % 4;
    BlowupPoint p{n % k, sampling::uniform_box(rng, k, 1.0)};
    const Matrix fd = numeric_jacobian([&](const Point& u) { return blowdown({p.chart, u}); }, p.u);
    CHECK(std::abs(fd.determinant() - pullback_volume_density(p)) < 1e-8);
    CHECK((chart_jacobian(p) - fd).norm() < 1e-8);
  }
}

TEST_CASE("lifted field is the push-forward of the slowed field") {
  const SaddleSpec spec({-1.0, -0.5, 1.0, 2.0});
  const BumpProfile prof(0.1, 0.5);
  auto rng = sampling::make_rng(4);
  for (int n = 0; n < 500; ++n) {
    const BlowupPoint p = random_chart_point(rng, 4, 0.3);
    // DΨ·z = ρX(Ψ(u)), solved with the differentiated chart.
    const Point v = saddle::slow_field(spec, prof, blowdown(p));
    const Point z = chart_jacobian(p).lu().solve(v);
    const Point mine = lifted_field(spec, prof, p);
    CHECK((mine - z).norm() <= 1e-10 * std::max(1.0, z.norm()));
  }
}

TEST_CASE("lifted field is tangent to the exceptional set and smooth across it") {
  const SaddleSpec spec({-1.0, 1.0, 0.5});
  const BumpProfile prof(0.1, 0.5);
  BlowupPoint e{1, vec({0.3, 0.0, -0.8})};
  CHECK(lifted_field(spec, prof, e)[1] == 0.0);
  for (double h : {1e-2, 1e-3, 1e-4}) {
    BlowupPoint a = e, b = e;
    a.u[1] = h;
    b.u[1] = -h;
    const Point second = (lifted_field(spec, prof, a) - 2 * lifted_field(spec, prof, e) +
                          lifted_field(spec, prof, b)) /
                         (h * h);
    const Point first = (lifted_field(spec, prof, a) - lifted_field(spec, prof, b)) / (2 * h);
    CHECK(second.norm() < 10.0);
    CHECK((first - lifted_field_jacobian(spec, prof, e).col(1)).norm() < 1e-6);
  }
  const BlowupPoint f = lifted_slow_flow(spec, prof, e, 3.0);
  CHECK(f.exceptional());
  const BlowupPoint g = lifted_slow_flow(spec, prof, e, -3.0);
  CHECK(g.exceptional());
}

TEST_CASE("lifted flow: closed form in chart 0 without slow-down") {
  const SaddleSpec spec({-1.0, 1.0});
  const auto one = BumpProfile::uniform(1.0);
  const BlowupPoint p{0, vec({0.2, 0.1})};
  CHECK((lifted_field(spec, one, p) - vec({-0.2, 0.2})).norm() < 1e-15);
  const BlowupPoint q = lifted_slow_flow(spec, one, p, 0.5, {1e-3, 1e9});
  CHECK(q.chart == 0);
  CHECK(q.u[0] == doctest::Approx(0.2 * std::exp(-0.5)).epsilon(1e-12));
  CHECK(q.u[1] == doctest::Approx(0.1 * std::exp(1.0)).epsilon(1e-12));
}

TEST_CASE("blow-down commutes with the flows, across chart changes") {
  const SaddleSpec spec({-1.0, -1.0, 1.0, 1.0});
  const BumpProfile prof(0.1, 0.5);
  auto rng = sampling::make_rng(5);
  int switched = 0;
  double worst = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const BlowupPoint p = random_chart_point(rng, 4, 0.3);
    const double t = sampling::uniform(rng, 0.0, 1.0);
    const BlowupPoint q = lifted_slow_flow(spec, prof, p, t);
    if (q.chart != p.chart) ++switched;
    const Point direct = saddle::flow_slow(spec, prof, blowdown(p), t);
    worst = std::max(worst, (blowdown(q) - direct).norm());
  }
  CHECK(worst < 1e-7);
  CHECK(switched > 50);
}

TEST_CASE("lifted variational flow matches finite differences of the lifted flow") {
  const SaddleSpec spec({-1.0, 1.0, 1.5});
  const BumpProfile prof(0.1, 0.6);
  const BlowupPoint p{0, vec({0.12, 0.4, -0.3})};
  const auto r = lifted_variational_flow(spec, prof, p, 1.0);
  const LiftOptions fixed{1e-3, 1e9};
  const Matrix fd = numeric_jacobian(
      [&](const Point& u) { return lifted_slow_flow(spec, prof, {0, u}, 1.0, fixed).u; }, p.u);
  CHECK((fd - r.jacobian).norm() / r.jacobian.norm() < 1e-6);
  CHECK((r.p.u - lifted_slow_flow(spec, prof, p, 1.0, fixed).u).norm() < 1e-13);
}

TEST_CASE("chart independence of the lifted field and the flow") {
  const SaddleSpec spec({-1.0, -0.5, 1.0});
  const BumpProfile prof(0.05, 0.5);
  auto rng = sampling::make_rng(6);
  for (int n = 0; n < 300; ++n) {
    const BlowupPoint p = random_chart_point(rng, 3, 0.3);
    const int target = (p.chart + 1) % 3;
    if (std::abs(p.u[target]) < 0.05) continue;
    const BlowupPoint q = chart_transition(p, target);
    const Point pushed = transition_jacobian(p, target) * lifted_field(spec, prof, p);
    const Point there = lifted_field(spec, prof, q);
    CHECK((pushed - there).norm() <= 1e-10 * std::max(1.0, there.norm()));
    const Point a = blowdown(lifted_slow_flow(spec, prof, p, 0.7));
    const Point b = blowdown(lifted_slow_flow(spec, prof, q, 0.7));
    CHECK((a - b).norm() < 1e-10);
  }
}

TEST_CASE("Katok-Lewis density") {
  const auto kl2 = KLStructure::volume_preserving(2);
  CHECK(kl2.alpha == -0.5);
  for (double u1 : {1e-8, 0.01, 0.7})
    CHECK(kl_density(kl2, {0, vec({u1, 0.0})}) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(kl_density(kl2, {0, vec({0.0, 0.0})}) == doctest::Approx(0.5));
  const KLStructure id(3, 0.0);
  CHECK(kl_density(id, {2, vec({0.3, -0.2, 0.4})}) == doctest::Approx(0.16));
  CHECK_THROWS_AS(KLStructure(2, -1.0), DomainError);
  CHECK_THROWS_AS(KLStructure(2, 0.2), DomainError);

  const auto kl3 = KLStructure::volume_preserving(3);
  auto rng = sampling::make_rng(7);
  for (int n = 0; n < 300; ++n) {
    BlowupPoint p{n % 3, sampling::uniform_box(rng, 3, 1.0)};
    if (std::abs(p.u[p.chart]) < 0.05) continue;
    const Matrix fd = numeric_jacobian(
        [&](const Point& u) { return kl_chart_map(kl3, {p.chart, u}); }, p.u, 1e-7);
    CHECK(std::abs(fd.determinant() - kl_density(kl3, p)) < 1e-6);
    // Absolute value is the (1/k)·f_α^k, independent of the radial coordinate.
    double q = 1.0;
    for (int j = 0; j < 3; ++j)
      if (j != p.chart) q += p.u[j] * p.u[j];
    CHECK(std::abs(kl_density(kl3, p)) == doctest::Approx(std::pow(q, -1.0) / 3).epsilon(1e-13));
    const BlowupPoint back = kl_chart_inverse(kl3, kl_chart_map(kl3, p), p.chart);
    CHECK((back.u - p.u).norm() < 1e-12);
  }
}

TEST_CASE("new norm") {
  const auto kl2 = KLStructure::volume_preserving(2);
  CHECK(new_norm(kl2, vec({0.6, 0.8})) == doctest::Approx(1.0));
  CHECK(new_norm(kl2, vec({0.04, 0.0})) == doctest::Approx(0.2));
  double prev = 0.0;
  for (int i = 1; i <= 100; ++i) {
    const double v = new_norm(kl2, vec({0.0, i / 100.0}));
    CHECK(v > prev);
    prev = v;
  }
  // Φ realizes the new norm: ‖Φ(x)‖ = new_norm(x).
  const Point x = vec({0.01, -0.02, 0.005});
  const auto kl3 = KLStructure::volume_preserving(3);
  const auto y = kl_phi<double>(kl3, {x.data(), 3});
  CHECK(std::hypot(y[0], y[1], y[2]) == doctest::Approx(new_norm(kl3, x)));
}

TEST_CASE("nondegeneracy: box minimum of the density") {
  for (int k = 2; k <= 4; ++k) {
    const auto kl = KLStructure::volume_preserving(k);
    const double bound = std::pow(static_cast<double>(k), -(k - 1) / 2.0) / k;
    const double m = kl_density_box_minimum(kl, 5);
    CHECK(m >= bound * (1 - 1e-12));
    CHECK(m == doctest::Approx(bound));  // attained at the box corners
  }
}

TEST_CASE("KL rate check: exponents divided by k") {
  const SaddleSpec spec({-1.0, 1.0});
  const BumpProfile prof(0.1, 0.5);
  const auto kl = KLStructure::volume_preserving(2);
  const auto rep = kl_rate_check(spec, kl, prof, {1.0}, 50, 1);
  CHECK(rep.within_bounds);
  CHECK(rep.ratio_max[0] <= std::exp(0.25) * (1 + 1e-12));
  const Point axis = vec({0.0, 0.01});
  CHECK(new_norm(kl, saddle::flow_slow(spec, prof, axis, 1.0)) / new_norm(kl, axis) ==
        doctest::Approx(std::exp(0.25)).epsilon(1e-12));
  CHECK(rep.bound_upper[0] == doctest::Approx(std::exp(0.25)));

  const auto sweep = kl_rate_check(spec, kl, prof, {1, 2, 4}, 100, 2);
  CHECK(sweep.within_bounds);
  CHECK(sweep.unstable_axis_slope == doctest::Approx(sweep.expected_slope).epsilon(1e-8));
  CHECK(sweep.expected_slope == doctest::Approx(0.25));

  const auto plain = kl_rate_check(spec, KLStructure(2, 0.0), prof, {1, 2, 4}, 100, 2);
  CHECK(plain.within_bounds);
  CHECK(plain.bound_upper[1] == doctest::Approx(std::exp(0.5 * 2)));
  CHECK(plain.unstable_axis_slope == doctest::Approx(0.5).epsilon(1e-8));

  const SaddleSpec spec4({-1.0, -1.0, 1.0, 1.0});
  CHECK(kl_rate_check(spec4, KLStructure::volume_preserving(4), prof, {1, 2, 4}, 100, 3).within_bounds);
}

TEST_CASE("Remark 2 probe: non-constant densities lose C1 at the exceptional set") {
  const auto flat = remark2_density_probe(2, [](const Point&) { return 1.0; });
  CHECK(flat.bounded);
  for (double d : flat.derivatives) CHECK(d == 0.0);

  const auto linear = remark2_density_probe(2, [](const Point& x) { return 1.0 + x[0]; });
  CHECK_FALSE(linear.bounded);
  CHECK(linear.slope == doctest::Approx(-0.5).epsilon(1e-3));

  const auto quadratic = remark2_density_probe(2, [](const Point& x) { return 1.0 + x[0] * x[0]; });
  CHECK(quadratic.bounded);
  CHECK(quadratic.derivatives.back() < 2.0);
}
