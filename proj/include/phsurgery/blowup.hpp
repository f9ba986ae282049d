#pragma once

// Projective blow-up of D^k at the origin in affine charts, the lift of the
// slowed saddle, and the Katok-Lewis change of smooth structure.
//
// Charts are 0-based: chart i has coordinates u with x_i = u_i and
// x_j = u_j·u_i (j ≠ i); the line through x is [u_0 : … : 1 : … : u_{k−1}]
// with the 1 in slot i. The exceptional set is {u_i = 0}.

#include "phsurgery/dual.hpp"
#include "phsurgery/saddle.hpp"

#include <functional>
#include <span>
#include <vector>

namespace phsurgery::blowup {

using saddle::Matrix;
using saddle::Point;

struct BlowupPoint {
  int chart = 0;
  Point u;

  int k() const { return static_cast<int>(u.size()); }
  double radial() const { return u[chart]; }
  bool exceptional() const { return u[chart] == 0.0; }
};

/// Ψ_i at a generic scalar type.
template <typename S>
std::vector<S> chart_map(int chart, std::span<const S> u) {
  std::vector<S> x(u.size());
  for (std::size_t j = 0; j < u.size(); ++j)
    x[j] = static_cast<int>(j) == chart ? u[j] : u[j] * u[static_cast<std::size_t>(chart)];
  return x;
}

Point blowdown(const BlowupPoint& p);
/// Affine representative ℓ of the line, ℓ_i = 1.
Point line(const BlowupPoint& p);
/// Index of the dominant line coordinate, smallest index on ties.
int dominant_chart(const Point& v);
BlowupPoint lift(const Point& x);
BlowupPoint chart_transition(const BlowupPoint& p, int target);
/// Same point in the chart of its dominant line coordinate.
BlowupPoint canonical(const BlowupPoint& p);

/// DΨ_i(u) by forward-mode differentiation of the chart map.
Matrix chart_jacobian(const BlowupPoint& p);
/// Jacobian of the transition map chart(p) → target at p.
Matrix transition_jacobian(const BlowupPoint& p, int target);

/// Lift of ρX to chart i. With w = ρ(Ψ_i u)·Λℓ, so that ρX(Ψ_i u) = u_i·w,
/// the push-forward DΨ_i⁻¹(u_i·w) is
///   z_i = u_i·w_i,   z_j = w_j − u_j·w_i,
/// which is polynomial in (u, w) and extends across u_i = 0.
template <typename S>
std::vector<S> lifted_field(const saddle::SaddleSpec& spec, const saddle::BumpProfile& profile,
                            int chart, std::span<const S> u) {
  const std::size_t k = u.size();
  const auto ci = static_cast<std::size_t>(chart);
  std::vector<S> ell(k);
  for (std::size_t j = 0; j < k; ++j) ell[j] = j == ci ? S(1.0) : u[j];
  S s2(0.0);
  for (std::size_t j = 0; j < k; ++j) s2 += ell[j] * ell[j];
  const S rho = profile.of_squared_radius(u[ci] * u[ci] * s2);
  std::vector<S> w(k);
  for (std::size_t j = 0; j < k; ++j) w[j] = rho * (spec.rates()[j] * ell[j]);
  std::vector<S> z(k);
  for (std::size_t j = 0; j < k; ++j) z[j] = j == ci ? u[ci] * w[ci] : w[j] - u[j] * w[ci];
  return z;
}

Point lifted_field(const saddle::SaddleSpec& spec, const saddle::BumpProfile& profile,
                   const BlowupPoint& p);
Matrix lifted_field_jacobian(const saddle::SaddleSpec& spec, const saddle::BumpProfile& profile,
                             const BlowupPoint& p);

struct LiftOptions {
  double step = 1e-3;
  /// A chart is abandoned once some line coordinate exceeds this magnitude.
  double switch_threshold = 2.0;
};

/// Flow of the lifted field with automatic chart changes.
BlowupPoint lifted_slow_flow(const saddle::SaddleSpec& spec, const saddle::BumpProfile& profile,
                             const BlowupPoint& p, double t, const LiftOptions& opts = {});

struct LiftedVariational {
  BlowupPoint p;
  Matrix jacobian;  ///< tangent map in the fixed chart of the start point
};

/// Lifted flow and its tangent map in a single chart (no transitions).
LiftedVariational lifted_variational_flow(const saddle::SaddleSpec& spec,
                                          const saddle::BumpProfile& profile, const BlowupPoint& p,
                                          double t, double step = 1e-3);

/// det DΨ_i = u_i^{k−1}.
double pullback_volume_density(const BlowupPoint& p);

// ---------------------------------------------------------------------------
// Katok-Lewis structure

struct KLStructure {
  int k = 2;
  double alpha = 0.0;

  KLStructure(int k, double alpha);
  /// α = −(k−1)/k, the exponent making the pulled-back volume nondegenerate.
  static KLStructure volume_preserving(int k);
};

/// Φ(x) = ‖x‖^α x.
template <typename S>
std::vector<S> kl_phi(const KLStructure& kl, std::span<const S> x) {
  S s2(0.0);
  for (const auto& xi : x) s2 += xi * xi;
  std::vector<S> y(x.size());
  if (!(s2 > 0.0)) {
    for (auto& yi : y) yi = S(0.0);
    return y;
  }
  using std::pow;
  const S scale = pow(s2, 0.5 * kl.alpha);
  for (std::size_t j = 0; j < x.size(); ++j) y[j] = scale * x[j];
  return y;
}

/// Ψ_i^new = Φ∘Ψ_i, written as f_α·|u_i|^α·Ψ_i(u).
template <typename S>
std::vector<S> kl_chart_map(const KLStructure& kl, int chart, std::span<const S> u) {
  const auto ci = static_cast<std::size_t>(chart);
  S q(1.0);
  for (std::size_t j = 0; j < u.size(); ++j)
    if (j != ci) q += u[j] * u[j];
  using std::abs;
  using std::pow;
  const S f = pow(q, 0.5 * kl.alpha);
  const S r = abs(u[ci]);
  std::vector<S> x = chart_map<S>(chart, u);
  if (!(r > 0.0)) {
    for (auto& xi : x) xi = S(0.0);
    return x;
  }
  const S scale = f * pow(r, kl.alpha);
  for (auto& xi : x) xi = scale * xi;
  return x;
}

Point kl_chart_map(const KLStructure& kl, const BlowupPoint& p);
/// Inverse of Ψ_i^new off the exceptional set.
BlowupPoint kl_chart_inverse(const KLStructure& kl, const Point& y, int chart);

/// (α+1)·f_α^k·|u_i|^{kα}·u_i^{k−1}, signed by the chart orientation.
double kl_density(const KLStructure& kl, const BlowupPoint& p);
/// ‖x‖^{1+α}.
double new_norm(const KLStructure& kl, const Point& x);

/// Grid minimum of |kl_density| over the chart box {|u_j| ≤ 1, j ≠ i} with
/// u_i sampled in [-1, 1]; `points` nodes per axis.
double kl_density_box_minimum(const KLStructure& kl, int points = 11);

struct KLRateReport {
  std::vector<double> times;
  std::vector<double> ratio_min;  ///< inf new_norm(a_ρ^t x)/new_norm(x) at each time
  std::vector<double> ratio_max;
  std::vector<double> bound_lower;  ///< c^{−(1+α)}(λ')^{ρ₀t(1+α)}
  std::vector<double> bound_upper;  ///< c^{1+α}(μ')^{ρ₀t(1+α)}
  double unstable_axis_slope = 0.0;  ///< fitted d log(ratio)/dt on the top unstable axis
  double expected_slope = 0.0;       ///< ρ₀(1+α)·max rate
  bool within_bounds = true;
};

/// Samples `samples` points of the inner disk whose orbits stay inside
/// radius δ up to the largest time.
KLRateReport kl_rate_check(const saddle::SaddleSpec& spec, const KLStructure& kl,
                           const saddle::BumpProfile& profile, std::vector<double> times = {1, 2, 4},
                           std::size_t samples = 200, std::uint64_t seed = 0);

struct Remark2Report {
  int k = 2;
  std::vector<double> radii;        ///< u_i values along the ray
  std::vector<double> derivatives;  ///< |∂/∂u_i| of β∘Ψ_i^new by central differences
  double slope = 0.0;               ///< log-log slope of derivative against u_i
  bool bounded = true;              ///< below `cap` and not growing as r → 0
};

/// Evaluates β(Ψ_i^new(u)) along the ray u = (r, 0, …, 0) in chart 0 for
/// r ∈ {10⁻², …, 10⁻⁶}.
Remark2Report remark2_density_probe(int k, const std::function<double(const Point&)>& beta,
                                    double cap = 1e3);

}  // namespace phsurgery::blowup
