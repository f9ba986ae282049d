#pragma once

// Linear hyperbolic saddle on the unit disk D^k, its radial slow-down and the
// tangent dynamics of the slowed flow across the transition annulus
// δ ≤ ‖x‖ ≤ 2δ.

#include "phsurgery/dual.hpp"
#include "phsurgery/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace phsurgery::saddle {

using Point = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Diagonal linear saddle X(x) = diag(rates)·x.
class SaddleSpec {
 public:
  /// `c` is the constant in c⁻¹(λ')ᵗ ≤ ‖Daᵗv‖/‖v‖ ≤ c(μ')ᵗ; it is 1 for
  /// diagonal generators and kept for block saddles.
  explicit SaddleSpec(std::vector<double> rates, double c = 1.0);

  int k() const { return static_cast<int>(rates_.size()); }
  const std::vector<double>& rates() const { return rates_; }
  double rate(int i) const { return rates_[static_cast<std::size_t>(i)]; }
  double c() const { return c_; }

  double min_rate() const;
  double max_rate() const;
  double lambda_prime() const { return std::exp(min_rate()); }
  double mu_prime() const { return std::exp(max_rate()); }
  double trace() const;

  Point field(const Point& x) const;
  /// e^{tΛ}x.
  Point linear_flow(const Point& x, double t) const;
  SaddleSpec reversed() const;

 private:
  std::vector<double> rates_;
  double c_;
};

/// Hyperbolic model of the Anosov factor: the tangent cocycle is
/// diag(e^{t·stable}, 1, e^{t·unstable}) on E^s ⊕ E^c ⊕ E^u, the center block
/// being the flow direction alone.
struct AnosovModel {
  std::vector<double> stable_rates;
  std::vector<double> unstable_rates;
  double lambda = 0.0;  ///< contraction bound λ < 1 of the ambient flow
  double mu = 0.0;      ///< expansion bound μ > 1 of the ambient flow

  AnosovModel() = default;
  AnosovModel(std::vector<double> stable, std::vector<double> unstable, double lambda, double mu);

  int s() const { return static_cast<int>(stable_rates.size()); }
  int c() const { return 1; }
  int u() const { return static_cast<int>(unstable_rates.size()); }
  int dim() const { return s() + 1 + u(); }

  /// Diagonal exponents t·rate in the order (stable..., center, unstable...).
  Eigen::VectorXd exponents(double t) const;
  Matrix cocycle(double t) const;
  AnosovModel reversed() const;
};

/// Radial slow-down ρ(x) = ρ̄(‖x‖) with ρ̄ = ρ₀ on [0, δ], 1 on [2δ, ∞) and a
/// flat-ended C^∞ transition in between. The `uniform` kind is the constant
/// function, used for ρ ≡ 1 (no slow-down) and ρ ≡ ρ₀ controls.
class BumpProfile {
 public:
  enum class Kind { smooth, uniform };

  BumpProfile(double delta, double rho0);
  /// Constant ρ ≡ value; `delta` only fixes the annulus geometry for transit
  /// measurements.
  static BumpProfile uniform(double value, double delta = 0.0);

  Kind kind() const { return kind_; }
  double delta() const { return delta_; }
  double rho0() const { return rho0_; }

  /// Supremum of |S'| over the transition; S is the normalized transition.
  static constexpr double transition_slope_sup = 2.0;

  /// ρ̄(s).
  template <typename S>
  S radial(const S& s) const {
    if (kind_ == Kind::uniform) return S(rho0_);
    return S(rho0_) + (1.0 - rho0_) * transition((s - delta_) / delta_);
  }

  /// ρ evaluated from the squared radius; the square root is only taken
  /// inside the transition so that derivatives stay finite at the origin.
  template <typename S>
  S of_squared_radius(const S& s2) const {
    if (kind_ == Kind::uniform) return S(rho0_);
    if (s2 <= delta_ * delta_) return S(rho0_);
    if (s2 >= 4.0 * delta_ * delta_) return S(1.0);
    using std::sqrt;
    return radial(sqrt(s2));
  }

  template <typename S>
  S at(std::span<const S> x) const {
    S s2(0.0);
    for (const auto& xi : x) s2 += xi * xi;
    return of_squared_radius(s2);
  }

  /// eval_bump: ρ(x) for x in the open unit disk.
  double operator()(const Point& x) const;
  /// ρ̄'(s).
  double radial_derivative(double s) const;
  Point gradient(const Point& x) const;

  /// Normalized flat-ended transition S(r) = σ(r)/(σ(r)+σ(1−r)), σ(r) = e^{−1/r}.
  template <typename S>
  static S transition(const S& r) {
    if (r <= 0.0) return S(0.0);
    if (r >= 1.0) return S(1.0);
    using std::exp;
    const S a = exp(-1.0 / r);
    const S b = exp(-1.0 / (1.0 - r));
    return a / (a + b);
  }

 private:
  BumpProfile() = default;
  Kind kind_ = Kind::smooth;
  double delta_ = 0.0;
  double rho0_ = 1.0;
};

/// Slowed generator ρ(x)X(x) at a generic scalar type.
template <typename S>
std::vector<S> slow_field(const SaddleSpec& spec, const BumpProfile& profile, std::span<const S> x) {
  const S rho = profile.at(x);
  std::vector<S> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = rho * (spec.rates()[i] * x[i]);
  return out;
}

Point slow_field(const SaddleSpec& spec, const BumpProfile& profile, const Point& x);
/// D(ρX)(x) = X ∇ρᵀ + ρ·diag(rates).
Matrix slow_field_jacobian(const SaddleSpec& spec, const BumpProfile& profile, const Point& x);

struct IntegrationOptions {
  double step = 1e-3;
};

Point flow_slow(const SaddleSpec& spec, const BumpProfile& profile, const Point& x, double t,
                const IntegrationOptions& opts = {});

struct VariationalResult {
  Point x;
  Matrix jacobian;
};

VariationalResult variational_flow_slow(const SaddleSpec& spec, const BumpProfile& profile,
                                        const Point& x, double t,
                                        const IntegrationOptions& opts = {});

/// ⟨D(ρX)v, v⟩ and the shear bound (C₂‖∇ρ(x)‖‖x‖ + C₃)‖v‖² with C₂ = max|rate|
/// and C₃ = log μ'.
struct ShearSample {
  double form = 0.0;
  double bound = 0.0;
};
ShearSample shear(const SaddleSpec& spec, const BumpProfile& profile, const Point& x,
                  const Point& v);

// ---------------------------------------------------------------------------
// Domination condition

struct Rho0Choice {
  double rho0 = 0.0;
  double upper = 0.0;  ///< supremum of the feasible interval (0, upper)
};

/// Deterministic ρ₀: midpoint of the feasible interval of
///   (λ'/μ')^{ρ₀} > max(λ, μ⁻¹)   [and, in volume mode,
///   λ < (λ')^{ρ₀/k},  (μ')^{ρ₀/k} < μ]  intersected with (0, 1).
Rho0Choice pick_rho0(double lambda, double mu, double lambda_p, double mu_p, int k,
                     bool volume_mode);

// ---------------------------------------------------------------------------
// Annulus transits

enum class Sphere { inner, outer };

struct TransitReport {
  Point entry;
  Point exit;
  Sphere entry_sphere = Sphere::inner;
  Sphere exit_sphere = Sphere::outer;
  double time = 0.0;
  Matrix jacobian;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  /// max(σ_max, 1/σ_min): the distortion the transit exhibits.
  double distortion = 0.0;
  /// exp(T·(C₂·sup‖∇ρ‖‖x‖ + C₃)) for the forward and inverse flows; the
  /// integrated shear estimate along this orbit.
  double witness_upper = 0.0;
  double witness_lower = 0.0;
  bool within_c5 = true;
};

class TransitBudgetError : public NumericalError {
 public:
  TransitBudgetError(const std::string& what, double elapsed)
      : NumericalError(what), elapsed_(elapsed) {}
  double elapsed() const { return elapsed_; }

 private:
  double elapsed_;
};

struct TransitOptions {
  double step = 1e-3;
  double event_tol = 1e-10;
  double c5 = 50.0;  ///< acceptance constant for the distortion bound
};

TransitReport annulus_transit(const SaddleSpec& spec, const BumpProfile& profile, const Point& entry,
                              const TransitOptions& opts = {});

enum class TransitClass { inner_to_outer, outer_to_inner, outer_to_outer, inner_to_inner };
TransitClass classify(const TransitReport& r);
const char* to_string(TransitClass c);

struct TransitCampaign {
  double delta = 0.0;
  std::vector<TransitReport> transits;
  std::size_t excluded = 0;        ///< orbits exceeding the time budget
  std::size_t counts[4] = {0, 0, 0, 0};
  std::size_t inner_probes = 0;    ///< entries attempted on the inner sphere
  double c5 = 0.0;                 ///< sup distortion
  double time_min = 0.0;
  double time_max = 0.0;
  double time_mean = 0.0;
  std::size_t c5_violations = 0;
  std::size_t witness_violations = 0;
};

/// Random entries: a uniform direction d on S^{k−1} enters at δd when the
/// radial velocity there is outward and at 2δd when it is inward. The same
/// seed gives the same directions for every δ.
TransitCampaign transit_campaign(const SaddleSpec& spec, const BumpProfile& profile,
                                 std::size_t samples, std::uint64_t seed,
                                 const TransitOptions& opts = {});

}  // namespace phsurgery::saddle
