#pragma once

// Exterior calculus on R^n (n ≤ 6) with coefficient functions that can be
// evaluated on nested dual numbers, so derivatives of coefficients are exact.
// A k-form is stored as a map from index sets (bit masks, increasing order)
// to coefficient fields.

#include "phsurgery/dual.hpp"
#include "phsurgery/errors.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <type_traits>
#include <vector>

namespace phsurgery::forms {

using Point = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

constexpr int max_dim = 6;

namespace detail {
template <int L> struct Level;
template <> struct Level<0> { using type = double; };
template <> struct Level<1> { using type = D1; };
template <> struct Level<2> { using type = D2; };
template <> struct Level<3> { using type = D3; };
}  // namespace detail

/// Scalar type at nesting level L (double, D1, D2, D3).
template <int L>
using LevelScalar = typename detail::Level<L>::type;

/// Smooth function R^n → R. `order` is the number of further derivatives
/// that can still be taken exactly; fields built from generic callables have
/// order 3 and every `partial` uses one up.
class ScalarField {
 public:
  static constexpr int max_order = 3;
  template <typename S>
  using Fn = std::function<S(std::span<const S>)>;

  ScalarField() : ScalarField(constant(0, 0.0)) {}

  /// `f` must be callable as f(std::span<const S>) for S = double, D1, D2, D3.
  template <typename F>
  static ScalarField generic(int n, F f) {
    return assemble(n, max_order, [f](auto, auto x) { return f(x); });
  }
  static ScalarField constant(int n, double c);
  bool is_constant() const { return impl_->is_const; }
  static ScalarField coordinate(int n, int i);

  int dim() const { return impl_->n; }
  int order() const { return impl_->order; }
  /// Exactly zero by construction (sums with it are skipped).
  bool is_zero() const { return impl_->is_const && impl_->cval == 0.0; }

  template <typename S>
  S eval(std::span<const S> x) const {
    if (static_cast<int>(x.size()) != impl_->n) throw DomainError("scalar field: dimension mismatch");
    if constexpr (std::is_same_v<S, double>) return impl_->f0(x);
    else if constexpr (std::is_same_v<S, D1>) return call(impl_->f1, x);
    else if constexpr (std::is_same_v<S, D2>) return call(impl_->f2, x);
    else return call(impl_->f3, x);
  }
  double operator()(const Point& x) const { return eval<double>({x.data(), static_cast<std::size_t>(x.size())}); }

  ScalarField partial(int j) const;
  Point gradient(const Point& x) const;

  friend ScalarField operator+(const ScalarField& a, const ScalarField& b);
  friend ScalarField operator-(const ScalarField& a, const ScalarField& b);
  friend ScalarField operator*(const ScalarField& a, const ScalarField& b);
  friend ScalarField operator/(const ScalarField& a, const ScalarField& b);
  friend ScalarField operator*(double c, const ScalarField& a);
  friend ScalarField operator-(const ScalarField& a) { return -1.0 * a; }
  friend ScalarField operator+(const ScalarField& a, double c);

  /// Builds a field from g(std::integral_constant<int, L>, std::span<const
  /// LevelScalar<L>>) for the levels L ≤ order.
  template <typename G>
  static ScalarField assemble(int n, int order, G g) {
    auto impl = std::make_shared<Impl>();
    impl->n = n;
    impl->order = order;
    impl->f0 = [g](std::span<const double> x) { return g(std::integral_constant<int, 0>{}, x); };
    if (order >= 1) impl->f1 = [g](std::span<const D1> x) { return g(std::integral_constant<int, 1>{}, x); };
    if (order >= 2) impl->f2 = [g](std::span<const D2> x) { return g(std::integral_constant<int, 2>{}, x); };
    if (order >= 3) impl->f3 = [g](std::span<const D3> x) { return g(std::integral_constant<int, 3>{}, x); };
    return ScalarField(std::move(impl));
  }

 private:
  struct Impl {
    int n = 0;
    int order = 0;
    bool is_const = false;
    double cval = 0.0;
    Fn<double> f0;
    Fn<D1> f1;
    Fn<D2> f2;
    Fn<D3> f3;
  };
  explicit ScalarField(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

  template <typename S>
  static S call(const Fn<S>& f, std::span<const S> x) {
    if (!f) throw DomainError("scalar field: derivative order exhausted");
    return f(x);
  }

  std::shared_ptr<const Impl> impl_;
};

struct VectorField {
  std::vector<ScalarField> c;

  int dim() const { return static_cast<int>(c.size()); }
  Point operator()(const Point& x) const;
  /// Components evaluated at scalar type S.
  template <typename S>
  std::vector<S> eval(std::span<const S> x) const {
    std::vector<S> out;
    out.reserve(c.size());
    for (const auto& f : c) out.push_back(f.eval<S>(x));
    return out;
  }

  /// Σ rates_i x_i ∂_i.
  static VectorField linear_diagonal(const std::vector<double>& rates);
  friend VectorField operator*(const ScalarField& f, const VectorField& v);
};

/// Directional derivative X f.
ScalarField directional(const VectorField& x, const ScalarField& f);
/// Lie bracket [X, Y]^i = X^j ∂_j Y^i − Y^j ∂_j X^i.
VectorField bracket(const VectorField& x, const VectorField& y);

class Form {
 public:
  using Mask = std::uint32_t;

  Form(int n, int degree);
  static Form function(const ScalarField& f);
  /// f·dx_{i₀}∧…∧dx_{i_{p−1}}; the indices are sorted with the sign of the
  /// permutation, a repeated index gives the zero form.
  static Form monomial(int n, std::vector<int> indices, const ScalarField& f);
  static Form dx(int n, int i);
  static Form volume(int n);

  int dim() const { return n_; }
  int degree() const { return degree_; }
  const std::map<Mask, ScalarField>& terms() const { return terms_; }
  ScalarField coefficient(Mask m) const;
  void add_term(Mask m, const ScalarField& f);

  /// Dense coefficient vector indexed by mask (size 2^n).
  std::vector<double> eval(const Point& x) const;
  double max_abs(const Point& x) const;

  friend Form operator+(const Form& a, const Form& b);
  friend Form operator-(const Form& a, const Form& b);
  friend Form operator*(const ScalarField& f, const Form& a);

 private:
  int n_;
  int degree_;
  std::map<Mask, ScalarField> terms_;
};

Form d(const Form& w);
Form wedge(const Form& a, const Form& b);
/// ι_X w; interior of a 0-form is rejected.
Form interior(const VectorField& x, const Form& w);
/// ℒ_X w = ι_X dw + d ι_X w (ι_X dw alone for functions).
Form lie(const VectorField& x, const Form& w);

/// Max over probes of the largest coefficient magnitude.
double max_abs(const Form& w, const std::vector<Point>& probes);

// ---------------------------------------------------------------------------
// Volume lemma

struct RhoVolumeReport {
  std::size_t probes = 0;
  double invariance = 0.0;  ///< max |ℒ_X m|
  double residual = 0.0;    ///< max |ℒ_{ρX}(m/ρ)|
  double control = 0.0;     ///< max |ℒ_{ρX} m|, nonzero where ρ varies
};

/// Checks that the flow of ρX preserves m/ρ. Throws DomainError when ρ ≤ 0 at
/// a probe or when m is not X-invariant (|ℒ_X m| > invariance_tol).
RhoVolumeReport verify_rho_volume(const ScalarField& rho, const VectorField& x, const Form& m,
                                 const std::vector<Point>& probes, double invariance_tol = 1e-10);

// ---------------------------------------------------------------------------
// Equivariant Moser trick on R^n, n even, saddle a^t = diag(e^{−t}·I, e^{t}·I)

VectorField saddle_generator(int n = 4);
/// a^t x.
Point saddle_flow(const Point& x, double t);
/// η₀ = x₁dx₂∧…∧dx_n.
Form moser_eta0(int n = 4);
/// β(x) = (1/x₁)∫₀^{x₁} γ(q, x₂, …) dq, evaluated as ∫₀¹ γ(τx₁, x₂, …) dτ by
/// adaptive Simpson so it extends smoothly across x₁ = 0.
ScalarField moser_beta(const ScalarField& gamma, double tol = 1e-12);

struct MoserOptions {
  double radius = 0.5;  ///< domain disk; leaving it is an EscapeError
  int steps = 1000;     ///< RK4 steps in s
  double quad_tol = 1e-12;
};

/// Moser transport between ω₀ = dx₁∧…∧dx_n and ω₁ = (1+γ)ω₀ through
/// ω_s = (1+sγ)ω₀, with η = β·η₀ and ι_{Y_s}ω_s = η.
class MoserFlow {
 public:
  MoserFlow(ScalarField gamma, MoserOptions opts = {});

  int dim() const { return n_; }
  const ScalarField& gamma() const { return gamma_; }
  ScalarField alpha() const { return gamma_ + 1.0; }
  const ScalarField& beta() const { return beta_; }
  const Form& eta() const { return eta_; }
  const MoserOptions& options() const { return opts_; }

  /// Density 1 + sγ of ω_s; DomainError with the location when ≤ 0.
  double path_density(const Point& x, double s) const;
  /// Y_s.
  VectorField field(double s) const;

  /// h₁: flow of −Y_s over s ∈ [0, 1]; transports ω₀ to ω₁, i.e.
  /// α(h₁(x))·det Dh₁(x) = 1.
  /// `peak`, when given, receives max_s ‖x(s)‖ along the path.
  Point forward(const Point& x, double* peak = nullptr) const;
  /// h₁⁻¹ (backward in s); this is the map with h_*ω₁ = ω₀, i.e.
  /// det Dh(y) = α(y).
  Point inverse(const Point& y, double* peak = nullptr) const;
  Matrix forward_jacobian(const Point& x) const;
  Matrix inverse_jacobian(const Point& y) const;

 private:
  template <typename S>
  std::vector<S> transport(std::vector<S> x, bool backward, double* peak) const;
  template <typename S>
  std::vector<S> velocity(double s, const std::vector<S>& x) const;

  struct EtaTerm {
    int index;  ///< the missing dx_i
    double sign;
    ScalarField coeff;
  };

  int n_;
  std::vector<EtaTerm> eta_terms_;
  ScalarField gamma_;
  ScalarField beta_;
  Form eta_;
  MoserOptions opts_;
};

/// max over probes and s of ‖[X, Y_s]‖.
struct EquivarianceAudit {
  std::vector<double> s;
  std::vector<double> residual;
  double max() const;
};
EquivarianceAudit equivariance_audit(const MoserFlow& h, const VectorField& x,
                                     const std::vector<Point>& probes,
                                     std::vector<double> s = {0.0, 0.5, 1.0});

}  // namespace phsurgery::forms
