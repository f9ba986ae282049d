#include "doctest.h"

#include "phsurgery/forms.hpp"
#include "phsurgery/sampling.hpp"
#include "phsurgery/saddle.hpp"

#include <bit>
#include <cmath>

using namespace phsurgery;
using namespace phsurgery::forms;

namespace {

// Random polynomial of total degree ≤ 3 in n variables.
struct Poly {
  int n = 0;
  double c0 = 0.0;
  std::vector<double> c1, c2, c3;  // dense coefficient tables

  template <typename S>
  S operator()(std::span<const S> x) const {
    S r(c0);
    std::size_t p2 = 0, p3 = 0;
    for (int i = 0; i < n; ++i) {
      r += c1[static_cast<std::size_t>(i)] * x[i];
      for (int j = i; j < n; ++j) {
        r += c2[p2++] * (x[i] * x[j]);
        for (int k = j; k < n; ++k) r += c3[p3++] * (x[i] * x[j] * x[k]);
      }
    }
    return r;
  }
};

ScalarField random_poly(sampling::Rng& rng, int n) {
  Poly p;
  p.n = n;
  p.c0 = sampling::uniform(rng, -1, 1);
  for (int i = 0; i < n; ++i) p.c1.push_back(sampling::uniform(rng, -1, 1));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      p.c2.push_back(sampling::uniform(rng, -1, 1));
      for (int k = j; k < n; ++k) p.c3.push_back(sampling::uniform(rng, -1, 1));
    }
  return ScalarField::generic(n, [p](auto x) { return p(x); });
}

Form random_form(sampling::Rng& rng, int n, int degree) {
  Form w(n, degree);
  for (Form::Mask m = 0; m < (Form::Mask{1} << n); ++m)
    if (std::popcount(m) == degree) w.add_term(m, random_poly(rng, n));
  return w;
}

VectorField random_field(sampling::Rng& rng, int n) {
  VectorField v;
  for (int i = 0; i < n; ++i) v.c.push_back(random_poly(rng, n));
  return v;
}

std::vector<Point> probes(sampling::Rng& rng, int n, std::size_t count, double radius) {
  std::vector<Point> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(sampling::in_ball(rng, n, radius));
  return out;
}

double max_diff(const Form& a, const Form& b, const std::vector<Point>& pts) { return max_abs(a - b, pts); }

// Invariant monomials of the saddle −x₁∂₁−x₂∂₂+x₃∂₃+x₄∂₄.
ScalarField invariant_fixture(sampling::Rng& rng) {
  std::array<double, 4> c{};
  for (auto& ci : c) ci = sampling::uniform(rng, -0.3, 0.3);
  const double q = sampling::uniform(rng, -0.3, 0.3);
  return ScalarField::generic(4, [c, q](auto x) {
    const auto a = x[0] * x[2], b = x[0] * x[3], e = x[1] * x[2], f = x[1] * x[3];
    return c[0] * a + c[1] * b + c[2] * e + c[3] * f + q * (a * f) + q * (b * b);
  });
}

const ScalarField kInvariantGamma = ScalarField::generic(4, [](auto x) { return 0.1 * (x[0] * x[2] + x[1] * x[3]); });

}  // namespace

TEST_CASE("exterior algebra examples") {
  const int n = 3;
  CHECK(d(Form::dx(n, 0)).terms().empty());
  const Form e12 = wedge(Form::dx(n, 0), Form::dx(n, 1));
  VectorField d1;
  for (int i = 0; i < n; ++i) d1.c.push_back(ScalarField::constant(n, i == 0 ? 1.0 : 0.0));
  const Form i1 = interior(d1, e12);
  REQUIRE(i1.terms().size() == 1);
  CHECK(i1.terms().begin()->first == 0b010);
  CHECK(i1.terms().begin()->second(Point::Zero(n)) == 1.0);
  const Form e21 = wedge(Form::dx(n, 1), Form::dx(n, 0));
  CHECK(e21.coefficient(0b011)(Point::Zero(n)) == -1.0);
  CHECK(Form::monomial(n, {2, 0, 1}, ScalarField::constant(n, 1.0)).coefficient(0b111)(Point::Zero(n)) == 1.0);
  CHECK(Form::monomial(n, {1, 0, 2}, ScalarField::constant(n, 1.0)).coefficient(0b111)(Point::Zero(n)) == -1.0);
  CHECK(Form::monomial(n, {1, 1}, ScalarField::constant(n, 1.0)).terms().empty());
  CHECK(wedge(Form::dx(n, 1), Form::dx(n, 1)).terms().empty());
  // d(x₀x₁ dx₂) = x₁ dx₀∧dx₂ + x₀ dx₁∧dx₂.
  const ScalarField f = ScalarField::generic(n, [](auto x) { return x[0] * x[1]; });
  const Form df = d(f * Form::dx(n, 2));
  Point p(3);
  p << 0.3, -0.7, 2.0;
  CHECK(df.coefficient(0b101)(p) == doctest::Approx(-0.7));
  CHECK(df.coefficient(0b110)(p) == doctest::Approx(0.3));
}

TEST_CASE("degree and dimension errors") {
  const Form vol = Form::volume(3);
  CHECK_THROWS_AS(d(vol), DomainError);
  CHECK_THROWS_AS(wedge(Form::dx(3, 0), vol), DomainError);
  CHECK_THROWS_AS(interior(VectorField::linear_diagonal({1, 1, 1}), Form::function(ScalarField::constant(3, 1))),
                  DomainError);
  CHECK_THROWS_AS(Form(7, 1), DomainError);
  CHECK_THROWS_AS(Form(3, 4), DomainError);
  CHECK_THROWS_AS(ScalarField::constant(2, 1) + ScalarField::constant(3, 1) * ScalarField::coordinate(3, 0),
                  DomainError);
  // Three derivatives are available, the fourth is not.
  const ScalarField x0 = ScalarField::coordinate(2, 0);
  const ScalarField cube = x0 * x0 * x0;
  CHECK(cube.partial(0).partial(0).partial(0)(Point::Ones(2)) == doctest::Approx(6.0));
  CHECK_THROWS_AS(cube.partial(0).partial(0).partial(0).partial(0)(Point::Ones(2)), DomainError);
}

TEST_CASE("d squared vanishes on random polynomial forms") {
  auto rng = sampling::make_rng(1);
  const auto pts = probes(rng, 4, 1000, 1.0);
  for (int deg = 0; deg <= 2; ++deg) {
    const Form w = random_form(rng, 4, deg);
    CHECK(max_abs(d(d(w)), pts) < 1e-10);
  }
  const Form w5 = random_form(rng, 5, 3);
  CHECK(max_abs(d(d(w5)), probes(rng, 5, 200, 1.0)) < 1e-10);
}

TEST_CASE("Leibniz rules on random forms") {
  auto rng = sampling::make_rng(2);
  const auto pts = probes(rng, 4, 1000, 1.0);
  const ScalarField f = random_poly(rng, 4);
  const Form a = random_form(rng, 4, 1);
  const Form b = random_form(rng, 4, 2);
  CHECK(max_diff(d(f * a), wedge(d(Form::function(f)), a) + f * d(a), pts) < 1e-10);
  // d(a∧b) = da∧b − a∧db for a of degree 1.
  CHECK(max_diff(d(wedge(a, b)), wedge(d(a), b) - wedge(a, d(b)), pts) < 1e-10);
  // The interior product is an antiderivation as well.
  const VectorField x = random_field(rng, 4);
  CHECK(max_diff(interior(x, wedge(a, b)), wedge(interior(x, a), b) - wedge(a, interior(x, b)), pts) < 1e-10);
}

TEST_CASE("Cartan-formula Lie derivative against the coordinate formula") {
  auto rng = sampling::make_rng(3);
  const int n = 4;
  const VectorField x = random_field(rng, n);
  const ScalarField f = random_poly(rng, n);
  const Form a = random_form(rng, n, 1);
  const Form b = random_form(rng, n, 2);
  const Form la = lie(x, a);
  const Form lb = lie(x, b);
  const Form lf = lie(x, Form::function(f));
  auto coef2 = [&](int i, int j, const Point& p) {
    if (i == j) return 0.0;
    const double s = i < j ? 1.0 : -1.0;
    return s * b.coefficient((Form::Mask{1} << i) | (Form::Mask{1} << j))(p);
  };
  for (const auto& p : probes(rng, n, 100, 1.0)) {
    // Functions: central differences of f along X.
    const Point v = x(p);
    const double h = 1e-5;
    CHECK(lf.coefficient(0)(p) == doctest::Approx((f(p + h * v) - f(p - h * v)) / (2 * h)).epsilon(1e-7));
    Matrix dx(n, n);  // dx(j, i) = ∂_i X^j
    for (int j = 0; j < n; ++j) dx.row(j) = x.c[static_cast<std::size_t>(j)].gradient(p).transpose();
    for (int i = 0; i < n; ++i) {
      const ScalarField ai = a.coefficient(Form::Mask{1} << i);
      double expect = ai.gradient(p).dot(v);
      for (int j = 0; j < n; ++j) expect += a.coefficient(Form::Mask{1} << j)(p) * dx(j, i);
      CHECK(la.coefficient(Form::Mask{1} << i)(p) == doctest::Approx(expect).epsilon(1e-10));
    }
    for (int i = 0; i < n; ++i)
      for (int k = i + 1; k < n; ++k) {
        const Form::Mask m = (Form::Mask{1} << i) | (Form::Mask{1} << k);
        double expect = b.coefficient(m).gradient(p).dot(v);
        for (int j = 0; j < n; ++j) expect += coef2(j, k, p) * dx(j, i) + coef2(i, j, p) * dx(j, k);
        CHECK(lb.coefficient(m)(p) == doctest::Approx(expect).epsilon(1e-10));
      }
  }
}

TEST_CASE("Lie derivative of the volume is the divergence") {
  auto rng = sampling::make_rng(4);
  const auto pts = probes(rng, 4, 1000, 1.0);
  const Form vol = Form::volume(4);
  CHECK(max_abs(lie(VectorField::linear_diagonal({-1, -1, 1, 1}), vol), pts) < 1e-14);
  CHECK(max_abs(lie(VectorField::linear_diagonal({-1, -2, 1, 2}), vol), pts) < 1e-14);
  const Form l = lie(VectorField::linear_diagonal({1, 2, 0.5, 0}), vol);
  CHECK(l.coefficient(0b1111)(pts[0]) == doctest::Approx(3.5));
}

TEST_CASE("volume lemma for the slowed saddle") {
  const saddle::BumpProfile profile(0.1, 0.5);
  const ScalarField rho = ScalarField::generic(4, [profile](auto x) { return profile.at(x); });
  const VectorField x = VectorField::linear_diagonal({-1, -1, 1, 1});
  const Form m = Form::volume(4);
  auto rng = sampling::make_rng(5);
  std::vector<Point> pts;
  for (int i = 0; i < 1000; ++i) pts.push_back(sampling::unit_vector(rng, 4) * sampling::uniform(rng, 0.0, 0.3));
  const auto rep = verify_rho_volume(rho, x, m, pts);
  CHECK(rep.invariance < 1e-14);
  CHECK(rep.residual < 1e-10);
  CHECK(rep.control >= 1e-3);
  std::size_t in_annulus = 0;
  for (const auto& p : pts) in_annulus += p.norm() > 0.1 && p.norm() < 0.2;
  CHECK(in_annulus > 100);

  const auto one = verify_rho_volume(ScalarField::constant(4, 1.0), x, m, pts);
  CHECK(one.residual == 0.0);
  CHECK(one.control == 0.0);

  CHECK_THROWS_AS(verify_rho_volume(rho, VectorField::linear_diagonal({1, 1, 1, 1}), m, pts), DomainError);
  CHECK_THROWS_AS(verify_rho_volume(ScalarField::coordinate(4, 0), x, m, pts), DomainError);
}

TEST_CASE("eta0 is a primitive of the volume and saddle invariant") {
  auto rng = sampling::make_rng(6);
  const auto pts = probes(rng, 4, 1000, 0.5);
  const Form eta0 = moser_eta0(4);
  const Form w0 = Form::volume(4);
  const VectorField x = saddle_generator(4);
  CHECK(max_diff(d(eta0), w0, pts) < 1e-10);
  CHECK(max_abs(lie(x, eta0), pts) < 1e-10);
  // Both terms of the Cartan formula, with dη₀ = ω₀ substituted.
  CHECK(max_diff(interior(x, w0) + d(interior(x, eta0)), Form(4, 3), pts) < 1e-10);
  CHECK(max_abs(interior(x, w0), pts) > 0.01);
}

TEST_CASE("moser beta: closed forms and defining identity") {
  auto rng = sampling::make_rng(7);
  const auto pts = probes(rng, 4, 300, 0.5);
  const ScalarField c = ScalarField::constant(4, 0.7);
  const ScalarField x1x3 = ScalarField::generic(4, [](auto x) { return x[0] * x[2]; });
  const ScalarField b0 = moser_beta(c);
  const ScalarField b1 = moser_beta(x1x3);
  const ScalarField x1 = ScalarField::coordinate(4, 0);
  for (const auto& p : pts) {
    CHECK(b0(p) == doctest::Approx(0.7).epsilon(1e-14));
    CHECK(b1(p) == doctest::Approx(p[0] * p[2] / 2).epsilon(1e-12));
  }
  const ScalarField gamma = invariant_fixture(rng) + 0.3 * ScalarField::generic(4, [](auto x) { return sin(x[1]); });
  const ScalarField beta = moser_beta(gamma);
  const ScalarField lhs = (x1 * beta).partial(0);
  for (const auto& p : pts) CHECK(lhs(p) == doctest::Approx(gamma(p)).epsilon(1e-10));
  Point z(4);
  z << 0.0, 0.3, -0.2, 0.1;
  CHECK(beta(z) == doctest::Approx(gamma(z)).epsilon(1e-14));
  // d(βη₀) = βω₀ + dβ∧η₀ = γω₀.
  const Form eta0 = moser_eta0(4);
  const Form w0 = Form::volume(4);
  const Form deta = d(beta * eta0);
  CHECK(max_diff(deta, beta * w0 + wedge(d(Form::function(beta)), eta0), pts) < 1e-10);
  CHECK(max_diff(deta, gamma * w0, pts) < 1e-10);
}

TEST_CASE("moser beta inherits saddle invariance") {
  auto rng = sampling::make_rng(8);
  const auto pts = probes(rng, 4, 1000, 0.5);
  const VectorField x = saddle_generator(4);
  const ScalarField xb = directional(x, moser_beta(kInvariantGamma));
  double worst = 0.0;
  for (const auto& p : pts) worst = std::max(worst, std::abs(xb(p)));
  CHECK(worst < 1e-9);
  for (int trial = 0; trial < 5; ++trial) {
    const ScalarField g = invariant_fixture(rng);
    const ScalarField xg = directional(x, g);
    const ScalarField xbg = directional(x, moser_beta(g));
    for (int i = 0; i < 100; ++i) {
      CHECK(std::abs(xg(pts[static_cast<std::size_t>(i)])) < 1e-15);
      CHECK(std::abs(xbg(pts[static_cast<std::size_t>(i)])) < 1e-9);
    }
  }
  // A non-invariant γ gives a non-invariant β.
  const ScalarField bad = directional(x, moser_beta(ScalarField::coordinate(4, 0)));
  CHECK(std::abs(bad(pts[0])) > 1e-3);
}

TEST_CASE("moser flow: trivial density gives the identity") {
  const MoserFlow h(ScalarField::constant(4, 0.0));
  Point p(4);
  p << 0.1, -0.2, 0.05, 0.3;
  CHECK(h.forward(p) == p);
  CHECK(h.inverse(p) == p);
  CHECK(equivariance_audit(h, saddle_generator(4), {p}).max() == 0.0);
}

TEST_CASE("moser flow transports the volume and commutes with the saddle") {
  const MoserFlow h(kInvariantGamma);
  const ScalarField alpha = h.alpha();
  auto rng = sampling::make_rng(9);
  const auto pts = probes(rng, 4, 30, 0.4);
  for (const auto& p : pts) {
    const Point q = h.forward(p);
    // Central-difference Jacobian of the integrated map.
    Matrix fd(4, 4);
    const double e = 1e-5;
    for (int c = 0; c < 4; ++c) {
      Point a = p, b = p;
      a[c] += e;
      b[c] -= e;
      fd.col(c) = (h.forward(a) - h.forward(b)) / (2 * e);
    }
    const Matrix ad = h.forward_jacobian(p);
    CHECK((ad - fd).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(std::abs(alpha(q) * fd.determinant() - 1.0) < 1e-6);
    CHECK(std::abs(h.inverse_jacobian(q).determinant() - alpha(q)) < 1e-6);
    CHECK((h.inverse(q) - p).norm() < 1e-12);
    // Y_s only has a first component, so h moves x₁ alone.
    CHECK(q.tail(3) == p.tail(3));
  }
  CHECK(h.forward(Point::Zero(4)).norm() == 0.0);

  const auto small = probes(rng, 4, 10, 0.15);
  double worst = 0.0;
  for (const auto& p : small)
    for (int i = 0; i <= 20; ++i) {
      const double t = -1.0 + 0.1 * i;
      double peak = 0.0;
      const Point lhs = h.forward(saddle_flow(p, t), &peak);
      CHECK(peak <= 0.5);
      worst = std::max(worst, (lhs - saddle_flow(h.forward(p), t)).norm());
      worst = std::max(worst, (h.inverse(saddle_flow(p, t)) - saddle_flow(h.inverse(p), t)).norm());
    }
  CHECK(worst < 1e-6);
}

TEST_CASE("equivariance audit") {
  auto rng = sampling::make_rng(10);
  const auto pts = probes(rng, 4, 300, 0.5);
  const VectorField x = saddle_generator(4);
  const auto ok = equivariance_audit(MoserFlow(kInvariantGamma), x, pts);
  REQUIRE(ok.s.size() == 3);
  CHECK(ok.max() < 1e-8);
  const auto bad = equivariance_audit(MoserFlow(ScalarField::coordinate(4, 0)), x, pts);
  CHECK(bad.max() > 1e-3);
}

TEST_CASE("moser flow failure modes") {
  Point p(4);
  p << 0.3, 0.3, 0.3, 0.3;
  CHECK_THROWS_AS(MoserFlow(ScalarField::constant(4, -2.0)).forward(0.5 * p), DomainError);
  MoserOptions tight;
  tight.radius = 0.605;
  const ScalarField steep = ScalarField::generic(4, [](auto x) { return 3.0 * x[0] * x[0] + 0.0 * x[1]; });
  CHECK_THROWS_AS(MoserFlow(steep, tight).inverse(p), EscapeError);
  CHECK_THROWS_AS(MoserFlow(ScalarField::constant(3, 0.0)), DomainError);
  CHECK_THROWS_AS(MoserFlow(ScalarField::constant(4, -2.0)).path_density(p, 1.0), DomainError);
}
