#include "phsurgery/forms.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

namespace phsurgery::forms {

namespace {

[[noreturn]] void order_exhausted() { throw DomainError("scalar field: derivative order exhausted"); }

void check_dim(int n) {
  if (n < 0 || n > max_dim) throw DomainError("forms: dimension must lie in 0..6");
}

template <typename Op>
ScalarField combine(const ScalarField& a, const ScalarField& b, Op op) {
  if (a.dim() != b.dim()) throw DomainError("scalar field: dimension mismatch");
  return ScalarField::assemble(a.dim(), std::min(a.order(), b.order()), [a, b, op](auto lv, auto x) {
    using S = LevelScalar<decltype(lv)::value>;
    return S(op(a.eval<S>(x), b.eval<S>(x)));
  });
}

std::string describe(const Point& x) {
  std::ostringstream os;
  os.precision(6);
  os << "(";
  for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

// Number of elements of `m` below index j.
int below(Form::Mask m, int j) { return std::popcount(m & ((Form::Mask{1} << j) - 1)); }

}  // namespace

// ---------------------------------------------------------------------------
// ScalarField

ScalarField ScalarField::constant(int n, double c) {
  check_dim(n);
  auto impl = std::make_shared<Impl>();
  impl->n = n;
  impl->order = max_order;
  impl->is_const = true;
  impl->cval = c;
  impl->f0 = [c](std::span<const double>) { return c; };
  impl->f1 = [c](std::span<const D1>) { return D1(c); };
  impl->f2 = [c](std::span<const D2>) { return D2(c); };
  impl->f3 = [c](std::span<const D3>) { return D3(c); };
  return ScalarField(std::move(impl));
}

ScalarField ScalarField::coordinate(int n, int i) {
  check_dim(n);
  if (i < 0 || i >= n) throw DomainError("coordinate: index out of range");
  return generic(n, [i](auto x) { return x[static_cast<std::size_t>(i)]; });
}

ScalarField ScalarField::partial(int j) const {
  const int n = dim();
  if (j < 0 || j >= n) throw DomainError("partial: index out of range");
  if (is_constant()) return constant(n, 0.0);
  if (order() < 1) order_exhausted();
  const ScalarField a = *this;
  return assemble(n, order() - 1, [a, j](auto lv, auto x) {
    constexpr int L = decltype(lv)::value;
    using S = LevelScalar<L>;
    if constexpr (L < max_order) {
      using T = LevelScalar<L + 1>;
      std::array<T, max_dim> buf{};
      for (std::size_t i = 0; i < x.size(); ++i)
        buf[i] = T(x[i], static_cast<int>(i) == j ? S(1.0) : S(0.0));
      return a.eval<T>(std::span<const T>(buf.data(), x.size())).eps;
    } else {
      order_exhausted();
      return S{};
    }
  });
}

Point ScalarField::gradient(const Point& x) const {
  Point g(dim());
  for (int j = 0; j < dim(); ++j) g[j] = partial(j)(x);
  return g;
}

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (a.is_constant() && b.is_constant()) return ScalarField::constant(a.dim(), a.impl_->cval + b.impl_->cval);
  return combine(a, b, [](const auto& p, const auto& q) { return p + q; });
}

ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  if (b.is_zero()) return a;
  return a + (-1.0) * b;
}

ScalarField operator*(const ScalarField& a, const ScalarField& b) {
  if (a.is_zero() || b.is_zero()) return ScalarField::constant(a.dim(), 0.0);
  if (a.is_constant()) return a.impl_->cval * b;
  if (b.is_constant()) return b.impl_->cval * a;
  return combine(a, b, [](const auto& p, const auto& q) { return p * q; });
}

ScalarField operator/(const ScalarField& a, const ScalarField& b) {
  if (b.is_zero()) throw DomainError("scalar field: division by the zero field");
  if (a.is_zero()) return a;
  if (b.is_constant()) return (1.0 / b.impl_->cval) * a;
  return combine(a, b, [](const auto& p, const auto& q) { return p / q; });
}

ScalarField operator*(double c, const ScalarField& a) {
  if (c == 0.0 || a.is_zero()) return ScalarField::constant(a.dim(), 0.0);
  if (c == 1.0) return a;
  if (a.is_constant()) return ScalarField::constant(a.dim(), c * a.impl_->cval);
  return ScalarField::assemble(a.dim(), a.order(), [a, c](auto lv, auto x) {
    using S = LevelScalar<decltype(lv)::value>;
    return S(c * a.eval<S>(x));
  });
}

ScalarField operator+(const ScalarField& a, double c) { return a + ScalarField::constant(a.dim(), c); }

// ---------------------------------------------------------------------------
// Vector fields

Point VectorField::operator()(const Point& x) const {
  Point v(dim());
  for (int i = 0; i < dim(); ++i) v[i] = c[static_cast<std::size_t>(i)](x);
  return v;
}

VectorField VectorField::linear_diagonal(const std::vector<double>& rates) {
  const int n = static_cast<int>(rates.size());
  VectorField v;
  for (int i = 0; i < n; ++i) v.c.push_back(rates[static_cast<std::size_t>(i)] * ScalarField::coordinate(n, i));
  return v;
}

VectorField operator*(const ScalarField& f, const VectorField& v) {
  VectorField out;
  for (const auto& ci : v.c) out.c.push_back(f * ci);
  return out;
}

ScalarField directional(const VectorField& x, const ScalarField& f) {
  if (x.dim() != f.dim()) throw DomainError("directional: dimension mismatch");
  ScalarField out = ScalarField::constant(f.dim(), 0.0);
  for (int j = 0; j < x.dim(); ++j) out = out + x.c[static_cast<std::size_t>(j)] * f.partial(j);
  return out;
}

VectorField bracket(const VectorField& x, const VectorField& y) {
  if (x.dim() != y.dim()) throw DomainError("bracket: dimension mismatch");
  VectorField out;
  for (int i = 0; i < x.dim(); ++i)
    out.c.push_back(directional(x, y.c[static_cast<std::size_t>(i)]) - directional(y, x.c[static_cast<std::size_t>(i)]));
  return out;
}

// ---------------------------------------------------------------------------
// Forms

Form::Form(int n, int degree) : n_(n), degree_(degree) {
  check_dim(n);
  if (degree < 0 || degree > n) throw DomainError("form: degree overflow");
}

Form Form::function(const ScalarField& f) {
  Form w(f.dim(), 0);
  w.add_term(0, f);
  return w;
}

Form Form::monomial(int n, std::vector<int> idx, const ScalarField& f) {
  if (f.dim() != n) throw DomainError("form: coefficient dimension mismatch");
  Form w(n, static_cast<int>(idx.size()));
  double sign = 1.0;
  for (std::size_t a = 0; a < idx.size(); ++a) {
    if (idx[a] < 0 || idx[a] >= n) throw DomainError("form: index out of range");
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      if (idx[a] == idx[b]) return w;
      if (idx[a] > idx[b]) sign = -sign;
    }
  }
  Mask m = 0;
  for (int i : idx) m |= Mask{1} << i;
  w.add_term(m, sign * f);
  return w;
}

Form Form::dx(int n, int i) { return monomial(n, {i}, ScalarField::constant(n, 1.0)); }

Form Form::volume(int n) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  return monomial(n, idx, ScalarField::constant(n, 1.0));
}

ScalarField Form::coefficient(Mask m) const {
  const auto it = terms_.find(m);
  return it == terms_.end() ? ScalarField::constant(n_, 0.0) : it->second;
}

void Form::add_term(Mask m, const ScalarField& f) {
  if (std::popcount(m) != degree_ || (m >> n_) != 0) throw DomainError("form: term does not match the degree");
  if (f.dim() != n_) throw DomainError("form: coefficient dimension mismatch");
  if (f.is_zero()) return;
  const auto it = terms_.find(m);
  if (it == terms_.end()) terms_.emplace(m, f);
  else it->second = it->second + f;
}

std::vector<double> Form::eval(const Point& x) const {
  if (x.size() != n_) throw DomainError("form: point dimension mismatch");
  std::vector<double> out(std::size_t{1} << n_, 0.0);
  for (const auto& [m, f] : terms_) out[m] = f(x);
  return out;
}

double Form::max_abs(const Point& x) const {
  double r = 0.0;
  for (double v : eval(x)) r = std::max(r, std::abs(v));
  return r;
}

Form operator+(const Form& a, const Form& b) {
  if (a.n_ != b.n_ || a.degree_ != b.degree_) throw DomainError("form: sum of mismatched forms");
  Form out = a;
  for (const auto& [m, f] : b.terms_) out.add_term(m, f);
  return out;
}

Form operator-(const Form& a, const Form& b) { return a + ScalarField::constant(b.dim(), -1.0) * b; }

Form operator*(const ScalarField& f, const Form& a) {
  Form out(a.n_, a.degree_);
  for (const auto& [m, g] : a.terms_) out.add_term(m, f * g);
  return out;
}

Form d(const Form& w) {
  const int n = w.dim();
  if (w.degree() + 1 > n) throw DomainError("d: degree overflow");
  Form out(n, w.degree() + 1);
  for (const auto& [m, f] : w.terms()) {
    for (int j = 0; j < n; ++j) {
      if (m & (Form::Mask{1} << j)) continue;
      const double sign = below(m, j) % 2 ? -1.0 : 1.0;
      out.add_term(m | (Form::Mask{1} << j), sign * f.partial(j));
    }
  }
  return out;
}

Form wedge(const Form& a, const Form& b) {
  if (a.dim() != b.dim()) throw DomainError("wedge: dimension mismatch");
  if (a.degree() + b.degree() > a.dim()) throw DomainError("wedge: degree overflow");
  Form out(a.dim(), a.degree() + b.degree());
  for (const auto& [ma, fa] : a.terms()) {
    for (const auto& [mb, fb] : b.terms()) {
      if (ma & mb) continue;
      int inversions = 0;
      for (int j = 0; j < a.dim(); ++j)
        if (mb & (Form::Mask{1} << j)) inversions += std::popcount(ma >> (j + 1));
      out.add_term(ma | mb, (inversions % 2 ? -1.0 : 1.0) * (fa * fb));
    }
  }
  return out;
}

Form interior(const VectorField& x, const Form& w) {
  if (x.dim() != w.dim()) throw DomainError("interior: dimension mismatch");
  if (w.degree() == 0) throw DomainError("interior: a function has no interior product");
  Form out(w.dim(), w.degree() - 1);
  for (const auto& [m, f] : w.terms()) {
    for (int j = 0; j < w.dim(); ++j) {
      if (!(m & (Form::Mask{1} << j))) continue;
      const double sign = below(m, j) % 2 ? -1.0 : 1.0;
      out.add_term(m & ~(Form::Mask{1} << j), sign * (x.c[static_cast<std::size_t>(j)] * f));
    }
  }
  return out;
}

Form lie(const VectorField& x, const Form& w) {
  if (w.degree() == 0) return interior(x, d(w));
  if (w.degree() == w.dim()) return d(interior(x, w));
  return interior(x, d(w)) + d(interior(x, w));
}

double max_abs(const Form& w, const std::vector<Point>& probes) {
  double r = 0.0;
  for (const auto& p : probes) r = std::max(r, w.max_abs(p));
  return r;
}

// ---------------------------------------------------------------------------
// Volume lemma

RhoVolumeReport verify_rho_volume(const ScalarField& rho, const VectorField& x, const Form& m,
                                 const std::vector<Point>& probes, double invariance_tol) {
  RhoVolumeReport rep;
  rep.probes = probes.size();
  const Form lx = lie(x, m);
  for (const auto& p : probes) {
    if (!(rho(p) > 0.0)) throw DomainError("verify_rho_volume: rho must be positive, fails at " + describe(p));
    const double r = lx.max_abs(p);
    rep.invariance = std::max(rep.invariance, r);
    if (r > invariance_tol)
      throw DomainError("verify_rho_volume: m is not invariant under X, |L_X m| = " + std::to_string(r) +
                        " at " + describe(p));
  }
  const VectorField rx = rho * x;
  const Form main = lie(rx, (ScalarField::constant(rho.dim(), 1.0) / rho) * m);
  const Form control = lie(rx, m);
  for (const auto& p : probes) {
    rep.residual = std::max(rep.residual, main.max_abs(p));
    rep.control = std::max(rep.control, control.max_abs(p));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Moser trick

namespace {

void check_even(int n) {
  if (n < 2 || n > max_dim || n % 2) throw DomainError("moser: dimension must be even, 2..6");
}

template <typename S, typename F>
S simpson(const F& f, double a, double b, const S& fa, const S& fm, const S& fb, const S& whole, double tol,
          int depth) {
  const double m = 0.5 * (a + b);
  const S flm = f(0.5 * (a + m));
  const S frm = f(0.5 * (m + b));
  const S left = ((m - a) / 6.0) * (fa + 4.0 * flm + fm);
  const S right = ((b - m) / 6.0) * (fm + 4.0 * frm + fb);
  const S delta = left + right - whole;
  if (depth <= 0) throw NumericalError("moser_beta: quadrature did not converge");
  // One forced refinement below the top level guards against lucky cancellations.
  if (depth < 50 && phsurgery::max_abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

VectorField saddle_generator(int n) {
  check_even(n);
  std::vector<double> rates(static_cast<std::size_t>(n), 1.0);
  for (int i = 0; i < n / 2; ++i) rates[static_cast<std::size_t>(i)] = -1.0;
  return VectorField::linear_diagonal(rates);
}

Point saddle_flow(const Point& x, double t) {
  check_even(static_cast<int>(x.size()));
  Point y = x;
  const int h = static_cast<int>(x.size()) / 2;
  y.head(h) *= std::exp(-t);
  y.tail(h) *= std::exp(t);
  return y;
}

Form moser_eta0(int n) {
  check_even(n);
  std::vector<int> idx;
  for (int i = 1; i < n; ++i) idx.push_back(i);
  return Form::monomial(n, idx, ScalarField::coordinate(n, 0));
}

ScalarField moser_beta(const ScalarField& gamma, double tol) {
  if (!(tol > 0.0)) throw DomainError("moser_beta: tolerance must be positive");
  const int n = gamma.dim();
  if (n < 1) throw DomainError("moser_beta: needs at least one coordinate");
  return ScalarField::assemble(n, gamma.order(), [gamma, tol](auto lv, auto x) {
    using S = LevelScalar<decltype(lv)::value>;
    std::array<S, max_dim> buf{};
    std::copy(x.begin(), x.end(), buf.begin());
    const std::span<const S> view(buf.data(), x.size());
    const S x1 = x[0];
    auto f = [&](double tau) {
      buf[0] = tau * x1;
      return gamma.eval<S>(view);
    };
    const S fa = f(0.0), fm = f(0.5), fb = f(1.0);
    const S whole = (1.0 / 6.0) * (fa + 4.0 * fm + fb);
    return simpson(f, 0.0, 1.0, fa, fm, fb, whole, tol, 50);
  });
}

MoserFlow::MoserFlow(ScalarField gamma, MoserOptions opts)
    : n_(gamma.dim()), gamma_(std::move(gamma)), eta_(0, 0), opts_(opts) {
  check_even(n_);
  if (!(opts_.radius > 0.0) || opts_.steps < 1) throw DomainError("moser: bad options");
  beta_ = moser_beta(gamma_, opts_.quad_tol);
  eta_ = beta_ * moser_eta0(n_);
  if (eta_.degree() != n_ - 1) throw DomainError("moser: eta must have degree n-1");
  const Form::Mask full = (Form::Mask{1} << n_) - 1;
  for (const auto& [m, f] : eta_.terms()) {
    const int i = std::countr_zero(full & ~m);
    eta_terms_.push_back({i, i % 2 ? -1.0 : 1.0, f});
  }
}

double MoserFlow::path_density(const Point& x, double s) const {
  const double a = 1.0 + s * gamma_(x);
  if (!(a > 0.0))
    throw DomainError("moser: path density 1 + s*gamma <= 0 at s = " + std::to_string(s) + ", x = " + describe(x));
  return a;
}

VectorField MoserFlow::field(double s) const {
  VectorField y;
  for (int i = 0; i < n_; ++i) y.c.push_back(ScalarField::constant(n_, 0.0));
  const ScalarField a = s * gamma_ + 1.0;
  for (const auto& t : eta_terms_) y.c[static_cast<std::size_t>(t.index)] = (t.sign * t.coeff) / a;
  return y;
}

// ι_Y(a·dx₁∧…∧dx_n) = a·Σᵢ (−1)^i Yᵢ dx_{[n]∖i}, so Yᵢ = (−1)^i η_{[n]∖i}/a.
template <typename S>
std::vector<S> MoserFlow::velocity(double s, const std::vector<S>& x) const {
  const std::span<const S> view(x.data(), x.size());
  const S g = gamma_.eval<S>(view);
  // 1 + sγ is affine in s, so the whole path is nondegenerate at x iff 1 + γ(x) > 0.
  if (!(1.0 + value(g) > 0.0)) {
    Point p(n_);
    for (int i = 0; i < n_; ++i) p[i] = value(x[static_cast<std::size_t>(i)]);
    throw DomainError("moser: path density 1 + s*gamma vanishes at s = " + std::to_string(-1.0 / value(g)) +
                      ", x = " + describe(p));
  }
  const S a = 1.0 + s * g;
  std::vector<S> v(x.size(), S(0.0));
  for (const auto& t : eta_terms_) v[static_cast<std::size_t>(t.index)] = -(t.sign * t.coeff.eval<S>(view)) / a;
  return v;
}

template <typename S>
std::vector<S> MoserFlow::transport(std::vector<S> x, bool backward, double* peak) const {
  const double h = (backward ? -1.0 : 1.0) / opts_.steps;
  double s = backward ? 1.0 : 0.0;
  auto norm = [&](const std::vector<S>& y) {
    double r = 0.0;
    for (const auto& yi : y) r += value(yi) * value(yi);
    return std::sqrt(r);
  };
  auto axpy = [](const std::vector<S>& y, double c, const std::vector<S>& k) {
    std::vector<S> out(y);
    for (std::size_t i = 0; i < y.size(); ++i) out[i] += c * k[i];
    return out;
  };
  double top = norm(x);
  if (top > opts_.radius) throw EscapeError("moser: start point outside the domain disk", s);
  for (int step = 0; step < opts_.steps; ++step) {
    const auto k1 = velocity(s, x);
    const auto k2 = velocity(s + 0.5 * h, axpy(x, 0.5 * h, k1));
    const auto k3 = velocity(s + 0.5 * h, axpy(x, 0.5 * h, k2));
    const auto k4 = velocity(s + h, axpy(x, h, k3));
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    s = backward ? 1.0 - (step + 1.0) / opts_.steps : (step + 1.0) / opts_.steps;
    const double r = norm(x);
    top = std::max(top, r);
    if (!std::isfinite(r)) throw NumericalError("moser: non-finite state");
    if (r > opts_.radius) throw EscapeError("moser: path left the domain disk", s);
  }
  if (peak) *peak = top;
  return x;
}

namespace {

std::vector<double> to_std(const Point& x) { return {x.data(), x.data() + x.size()}; }

Point to_point(const std::vector<double>& v) { return Eigen::Map<const Point>(v.data(), static_cast<Eigen::Index>(v.size())); }

}  // namespace

Point MoserFlow::forward(const Point& x, double* peak) const {
  if (x.size() != n_) throw DomainError("moser: point dimension mismatch");
  return to_point(transport(to_std(x), false, peak));
}

Point MoserFlow::inverse(const Point& y, double* peak) const {
  if (y.size() != n_) throw DomainError("moser: point dimension mismatch");
  return to_point(transport(to_std(y), true, peak));
}

namespace {

template <typename F>
Matrix dual_jacobian(int n, const Point& x, F&& map) {
  Matrix j(n, n);
  for (int c = 0; c < n; ++c) {
    std::vector<D1> seed(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) seed[static_cast<std::size_t>(i)] = D1(x[i], i == c ? 1.0 : 0.0);
    const auto out = map(std::move(seed));
    for (int i = 0; i < n; ++i) j(i, c) = out[static_cast<std::size_t>(i)].eps;
  }
  return j;
}

}  // namespace

Matrix MoserFlow::forward_jacobian(const Point& x) const {
  if (x.size() != n_) throw DomainError("moser: point dimension mismatch");
  return dual_jacobian(n_, x, [&](std::vector<D1> v) { return transport(std::move(v), false, nullptr); });
}

Matrix MoserFlow::inverse_jacobian(const Point& y) const {
  if (y.size() != n_) throw DomainError("moser: point dimension mismatch");
  return dual_jacobian(n_, y, [&](std::vector<D1> v) { return transport(std::move(v), true, nullptr); });
}

double EquivarianceAudit::max() const {
  double r = 0.0;
  for (double v : residual) r = std::max(r, v);
  return r;
}

EquivarianceAudit equivariance_audit(const MoserFlow& h, const VectorField& x, const std::vector<Point>& probes,
                                     std::vector<double> s) {
  EquivarianceAudit out;
  for (double si : s) {
    const VectorField b = bracket(x, h.field(si));
    double r = 0.0;
    for (const auto& p : probes) r = std::max(r, b(p).cwiseAbs().maxCoeff());
    out.s.push_back(si);
    out.residual.push_back(r);
  }
  return out;
}

}  // namespace phsurgery::forms
