#pragma once

// Cone fields on the model tangent space R^k ⊕ R^{s+1+u} (saddle or chart
// directions H, then E^s_N, E^c_N, E^u_N) and orbit-segment campaigns for the
// cone estimates near and across the slow-down annulus.

#include "phsurgery/blowup.hpp"
#include "phsurgery/saddle.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace phsurgery::cones {

using saddle::Matrix;
using saddle::Point;
using Vector = Eigen::VectorXd;

/// Coordinate layout of the model tangent space.
struct Layout {
  int k = 0;  ///< H block
  int s = 0;
  int u = 0;

  Layout() = default;
  Layout(int k_, const saddle::AnosovModel& n) : k(k_), s(n.s()), u(n.u()) {}
  int dim() const { return k + s + 1 + u; }
  int stable_begin() const { return k; }
  int center_index() const { return k + s; }
  int unstable_begin() const { return k + s + 1; }
};

/// Product metric with one positive weight per block; `product` means all
/// weights equal to 1.
struct MetricSpec {
  enum class Kind { product, weighted };
  Kind kind = Kind::product;
  double h = 1.0, stable = 1.0, center = 1.0, unstable = 1.0;

  static MetricSpec weighted_blocks(double h, double stable, double center, double unstable);
  /// Per-coordinate weights g_i of ‖v‖² = Σ g_i v_i².
  Vector weights(const Layout& layout) const;
};

double metric_norm(const Vector& v, const Vector& weights);

struct ConeSpec {
  Matrix center;  ///< orthonormal columns spanning the center subspace
  double omega = 0.1;

  ConeSpec(Matrix center, double omega);
  static ConeSpec unstable(const Layout& layout, double omega);       ///< centered at E^u_N
  static ConeSpec center_stable(const Layout& layout, double omega);  ///< E^s_N ⊕ E^c_N ⊕ H
};

/// A cone together with a metric; angles are metric angles to the center.
class Cone {
 public:
  Cone(ConeSpec spec, Vector weights);

  const ConeSpec& spec() const { return spec_; }
  double omega() const { return spec_.omega; }
  double angle(const Vector& v) const;
  bool contains(const Vector& v) const { return angle(v) < spec_.omega; }
  /// Vector at metric angle `theta` from the center; the center and normal
  /// directions come from the i-th low-discrepancy points.
  Vector sample(std::uint64_t i, double theta, const Vector& shift) const;

 private:
  ConeSpec spec_;
  Vector sqrt_w_;
  Matrix q_;     ///< metric-orthonormal center basis in scaled coordinates
  Matrix perp_;  ///< its orthogonal complement
};

bool in_cone(const Vector& v, const ConeSpec& cone, const Vector& weights);

// ---------------------------------------------------------------------------
// Tangent propagation

/// Slowed saddle × Anosov model.
struct ProductModel {
  saddle::SaddleSpec saddle;
  saddle::BumpProfile profile;
  saddle::AnosovModel anosov;
  double step = 1e-3;

  Layout layout() const { return Layout(saddle.k(), anosov); }
};

enum class FlowKind { inner_product, annulus, lifted };

struct TangentState {
  FlowKind kind = FlowKind::annulus;
  Point x;                  ///< Euclidean point (inner_product, annulus)
  blowup::BlowupPoint p;    ///< chart point (lifted)

  static TangentState euclidean(FlowKind kind, Point x);
  static TangentState lifted(blowup::BlowupPoint p);
};

struct Propagated {
  TangentState end;
  Matrix tangent;  ///< block tangent map diag(D-block, N-cocycle)
  Matrix frame;    ///< tangent·frame
};

/// Applies the block tangent map of the product flow over time t. The
/// inner_product kind requires the orbit to stay in the closed δ-ball.
Propagated propagate(const ProductModel& model, const TangentState& state, double t,
                     const Matrix& frame);

// ---------------------------------------------------------------------------
// Campaign reports

struct Witness {
  std::string check;
  std::size_t sample = 0;
  double time = 0.0;
  double value = 0.0;
  double threshold = 0.0;
  std::vector<double> start;  ///< start point coordinates (chart coordinates when lifted)
  int chart = -1;
};

struct Lemma1Config {
  saddle::SaddleSpec saddle{{-1.0, -1.0, 1.0, 1.0}};
  saddle::AnosovModel anosov{{-2.0}, {2.0}, std::exp(-2.0), std::exp(2.0)};
  double rho0 = 0.5;
  double delta = 0.1;
  double omega = 0.1;
  MetricSpec metric;
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  double t_min = 1.0;
  double t_max = 4.0;
  double grid = 0.25;          ///< spacing of the burn-in time grid
  int vectors = 6;             ///< cone vectors per sample and family
  double step = 1e-3;
  double burn_in_limit = 1.0;
  double expansion_tol = 0.05;
};

struct Lemma1Report {
  std::size_t samples = 0;
  std::size_t vectors_tested = 0;
  double burn_in = 0.0;                 ///< T_b, worst over samples
  double min_expansion_exponent = 0.0;  ///< min (1/t)·log(‖Dφ^t v‖/‖v‖), v ∈ C^u
  double mu_meas = 0.0;
  double expansion_threshold = 0.0;     ///< log μ − tol
  double log_kappa = 0.0;               ///< min domination exponent
  double kappa_meas = 0.0;
  std::size_t domination_pairs = 0;
  std::size_t u_invariance_violations = 0;
  std::size_t cs_invariance_violations = 0;
  std::size_t expansion_violations = 0;
  std::size_t domination_violations = 0;
  std::vector<Witness> witnesses;

  bool passed() const;
};

/// Lemma 1 on the lifted flow over the δ-neighbourhood of the exceptional
/// set (ρ ≡ ρ₀ there).
Lemma1Report lemma1_campaign(const Lemma1Config& cfg);

struct Lemma3Config {
  saddle::SaddleSpec saddle{{-1.0, -1.0, 1.0, 1.0}};
  saddle::AnosovModel anosov{{-2.0}, {2.0}, std::exp(-2.0), std::exp(2.0)};
  double rho0 = 0.5;
  bool slowdown = true;  ///< false: ρ ≡ 1 control
  double omega = 0.1;
  MetricSpec metric;
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  int vectors = 6;
  double step = 1e-3;
};

struct Lemma3Report {
  double delta = 0.0;
  std::size_t transits = 0;
  std::size_t excluded = 0;
  std::size_t counts[4] = {0, 0, 0, 0};
  std::size_t inner_probes = 0;
  double time_min = 0.0, time_mean = 0.0, time_max = 0.0;
  double c5 = 0.0;
  double c6_u = 0.0;   ///< max angle(Dφ^T v, E^u)/ω over v ∈ ∂C^u_ω(p)
  double c6_cs = 0.0;  ///< same for Dφ^{−T} on ∂C^cs_ω(φ^T p)
  double c7_u = 0.0;   ///< min ‖Dφ^T v‖/‖v‖ on ∂C^u_ω(p)
  double c7_cs = 0.0;
  double c6() const { return std::max(c6_u, c6_cs); }
  double c7() const { return std::min(c7_u, c7_cs); }
};

Lemma3Report lemma3_campaign(const Lemma3Config& cfg, double delta);

struct Lemma3Sweep {
  std::vector<Lemma3Report> per_delta;
  double c6_factor = 0.0;  ///< max/min of C₆ over the sweep
  double c7_factor = 0.0;
  double c5_factor = 0.0;
  bool all_classes_exercised = false;  ///< every realizable class observed, inner entries probed
};

Lemma3Sweep lemma3_sweep(const Lemma3Config& cfg, const std::vector<double>& deltas);

// ---------------------------------------------------------------------------
// Partial hyperbolicity chain

struct ChainRegion {
  std::string name;
  std::size_t samples = 0;
  double stable_max = 0.0;    ///< max (1/t)log‖Dφ^t v^s‖
  double center_min = 0.0;
  double center_max = 0.0;
  double unstable_min = 0.0;
  double log_lambda = 0.0;
  double log_mu = 0.0;
  bool passed = true;
  std::vector<Witness> witnesses;
};

struct ChainReport {
  std::vector<ChainRegion> regions;
  bool passed() const;
};

/// Checks ‖Dφ^t v^s‖ ≤ λ^t < ‖Dφ^t v^c‖ < μ^t ≤ ‖Dφ^t v^u‖ for t ∈ times (all
/// ≥ 1) in the far region (ρ ≡ 1), the inner region (ρ ≡ ρ₀, Euclidean) and
/// on the exceptional set (lifted chart, ρ ≡ ρ₀). The outer comparisons allow
/// equality up to rounding because the model rates may sit on log λ, log μ.
ChainReport ph_inequality_check(const saddle::SaddleSpec& saddle, const saddle::AnosovModel& anosov,
                                double rho0, double delta, std::size_t samples = 200,
                                std::uint64_t seed = 0, std::vector<double> times = {1, 2, 4});

}  // namespace phsurgery::cones
