#include "phsurgery/saddle.hpp"

#include "phsurgery/ode.hpp"
#include "phsurgery/parallel.hpp"
#include "phsurgery/sampling.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace phsurgery::saddle {

SaddleSpec::SaddleSpec(std::vector<double> rates, double c) : rates_(std::move(rates)), c_(c) {
  if (rates_.size() < 2) throw DomainError("saddle: need k >= 2 rates");
  const bool has_neg = std::any_of(rates_.begin(), rates_.end(), [](double r) { return r < 0.0; });
  const bool has_pos = std::any_of(rates_.begin(), rates_.end(), [](double r) { return r > 0.0; });
  if (!has_neg || !has_pos) throw DomainError("saddle: need at least one negative and one positive rate");
  if (!(c_ > 0.0)) throw DomainError("saddle: constant c must be positive");
}

double SaddleSpec::min_rate() const { return *std::min_element(rates_.begin(), rates_.end()); }
double SaddleSpec::max_rate() const { return *std::max_element(rates_.begin(), rates_.end()); }
double SaddleSpec::trace() const { return std::accumulate(rates_.begin(), rates_.end(), 0.0); }

Point SaddleSpec::field(const Point& x) const {
  Point v(x.size());
  for (int i = 0; i < k(); ++i) v[i] = rates_[i] * x[i];
  return v;
}

Point SaddleSpec::linear_flow(const Point& x, double t) const {
  Point y(x.size());
  for (int i = 0; i < k(); ++i) y[i] = std::exp(t * rates_[i]) * x[i];
  return y;
}

SaddleSpec SaddleSpec::reversed() const {
  std::vector<double> r(rates_);
  for (auto& v : r) v = -v;
  return SaddleSpec(std::move(r), c_);
}

AnosovModel::AnosovModel(std::vector<double> stable, std::vector<double> unstable, double lam,
                         double m)
    : stable_rates(std::move(stable)), unstable_rates(std::move(unstable)), lambda(lam), mu(m) {
  if (stable_rates.empty() || unstable_rates.empty())
    throw DomainError("anosov: stable and unstable blocks must be nonempty");
  if (!(lambda > 0.0 && lambda < 1.0 && mu > 1.0))
    throw DomainError("anosov: need 0 < lambda < 1 < mu");
  const double tol = 1e-12;
  for (double r : stable_rates)
    if (r > std::log(lambda) + tol) throw DomainError("anosov: stable rate exceeds log(lambda)");
  for (double r : unstable_rates)
    if (r < std::log(mu) - tol) throw DomainError("anosov: unstable rate below log(mu)");
}

Eigen::VectorXd AnosovModel::exponents(double t) const {
  Eigen::VectorXd e(dim());
  int j = 0;
  for (double r : stable_rates) e[j++] = t * r;
  e[j++] = 0.0;
  for (double r : unstable_rates) e[j++] = t * r;
  return e;
}

Matrix AnosovModel::cocycle(double t) const {
  return exponents(t).array().exp().matrix().asDiagonal();
}

AnosovModel AnosovModel::reversed() const {
  std::vector<double> s, u;
  for (double r : unstable_rates) s.push_back(-r);
  for (double r : stable_rates) u.push_back(-r);
  return AnosovModel(std::move(s), std::move(u), 1.0 / mu, 1.0 / lambda);
}

// ---------------------------------------------------------------------------

BumpProfile::BumpProfile(double delta, double rho0) : kind_(Kind::smooth), delta_(delta), rho0_(rho0) {
  if (!(delta > 0.0 && delta <= 0.5)) throw DomainError("bump: delta must lie in (0, 1/2]");
  if (!(rho0 > 0.0 && rho0 < 1.0)) throw DomainError("bump: rho0 must lie in (0, 1)");
  // |ρ̄'| = (1−ρ₀)|S'|/δ ≤ 1/δ.
  if ((1.0 - rho0) * transition_slope_sup > 1.0 + 1e-12) {
    std::ostringstream msg;
    msg << "bump: (1 - rho0) * sup|S'| = " << (1.0 - rho0) * transition_slope_sup
        << " > 1 violates |rho'| <= 1/delta (need rho0 >= 0.5)";
    throw DomainError(msg.str());
  }
}

BumpProfile BumpProfile::uniform(double value, double delta) {
  if (!(value > 0.0)) throw DomainError("bump: uniform value must be positive");
  if (delta < 0.0) throw DomainError("bump: delta must be nonnegative");
  BumpProfile p;
  p.kind_ = Kind::uniform;
  p.rho0_ = value;
  p.delta_ = delta;
  return p;
}

double BumpProfile::operator()(const Point& x) const {
  if (!(x.norm() < 1.0)) throw DomainError("bump: point outside the unit disk");
  const double s2 = x.squaredNorm();
  return of_squared_radius(s2);
}

double BumpProfile::radial_derivative(double s) const {
  if (kind_ == Kind::uniform) return 0.0;
  return radial(seeded(s, 1.0)).eps;
}

Point BumpProfile::gradient(const Point& x) const {
  Point g = Point::Zero(x.size());
  if (kind_ == Kind::uniform) return g;
  const double s = x.norm();
  if (s <= delta_ || s >= 2.0 * delta_) return g;
  return (radial_derivative(s) / s) * x;
}

// ---------------------------------------------------------------------------

Point slow_field(const SaddleSpec& spec, const BumpProfile& profile, const Point& x) {
  return profile.of_squared_radius(x.squaredNorm()) * spec.field(x);
}

Matrix slow_field_jacobian(const SaddleSpec& spec, const BumpProfile& profile, const Point& x) {
  const int k = spec.k();
  const double rho = profile.of_squared_radius(x.squaredNorm());
  Matrix d = spec.field(x) * profile.gradient(x).transpose();
  for (int i = 0; i < k; ++i) d(i, i) += rho * spec.rate(i);
  return d;
}

namespace {

void check_start(const Point& x, int k) {
  if (x.size() != k) throw DomainError("saddle: point dimension does not match k");
  if (!(x.norm() < 1.0)) throw DomainError("saddle: initial point outside the unit disk");
}

ode::Vector pack(const Point& x, const Matrix& j) {
  const auto k = x.size();
  ode::Vector y(k + k * k);
  y.head(k) = x;
  y.tail(k * k) = Eigen::Map<const Eigen::VectorXd>(j.data(), k * k);
  return y;
}

ode::Rhs variational_rhs(const SaddleSpec& spec, const BumpProfile& profile) {
  return [&spec, &profile](double, const ode::Vector& y) {
    const int k = spec.k();
    const Point x = y.head(k);
    const Eigen::Map<const Matrix> j(y.data() + k, k, k);
    ode::Vector dy(y.size());
    dy.head(k) = slow_field(spec, profile, x);
    const Matrix dj = slow_field_jacobian(spec, profile, x) * j;
    dy.tail(k * k) = Eigen::Map<const Eigen::VectorXd>(dj.data(), k * k);
    return dy;
  };
}

}  // namespace

Point flow_slow(const SaddleSpec& spec, const BumpProfile& profile, const Point& x, double t,
                const IntegrationOptions& opts) {
  check_start(x, spec.k());
  const ode::Rhs f = [&](double, const ode::Vector& y) { return slow_field(spec, profile, y); };
  const auto traj = ode::integrate(f, x, 0.0, t, opts.step,
                                   [](double, const ode::Vector& y) { return y.norm() < 1.0; });
  if (traj.stopped) {
    std::ostringstream msg;
    msg << "flow_slow: trajectory left the unit disk at t = " << traj.t;
    throw EscapeError(msg.str(), traj.t);
  }
  return traj.y;
}

VariationalResult variational_flow_slow(const SaddleSpec& spec, const BumpProfile& profile,
                                        const Point& x, double t, const IntegrationOptions& opts) {
  const int k = spec.k();
  check_start(x, k);
  bool finite = true;
  const auto traj = ode::integrate(variational_rhs(spec, profile), pack(x, Matrix::Identity(k, k)),
                                   0.0, t, opts.step, [&](double, const ode::Vector& y) {
                                     finite = y.allFinite();
                                     return finite && y.head(k).norm() < 1.0;
                                   });
  if (traj.stopped) {
    std::ostringstream msg;
    if (!finite) {
      msg << "variational_flow_slow: non-finite Jacobian at t = " << traj.t << ", x = "
          << traj.y.head(k).transpose();
      throw NumericalError(msg.str());
    }
    msg << "variational_flow_slow: trajectory left the unit disk at t = " << traj.t;
    throw EscapeError(msg.str(), traj.t);
  }
  VariationalResult out;
  out.x = traj.y.head(k);
  out.jacobian = Eigen::Map<const Matrix>(traj.y.data() + k, k, k);
  if (!(out.jacobian.determinant() > 0.0))
    throw NumericalError("variational_flow_slow: Jacobian determinant is not positive");
  return out;
}

ShearSample shear(const SaddleSpec& spec, const BumpProfile& profile, const Point& x,
                  const Point& v) {
  ShearSample s;
  s.form = v.dot(slow_field_jacobian(spec, profile, x) * v);
  const double c2 = std::max(std::abs(spec.min_rate()), std::abs(spec.max_rate()));
  const double c3 = std::log(spec.mu_prime());
  s.bound = (c2 * profile.gradient(x).norm() * x.norm() + c3) * v.squaredNorm();
  return s;
}

// ---------------------------------------------------------------------------

Rho0Choice pick_rho0(double lambda, double mu, double lambda_p, double mu_p, int k,
                     bool volume_mode) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw DomainError("pick_rho0: violated 0 < lambda < 1");
  if (!(mu > 1.0)) throw DomainError("pick_rho0: violated mu > 1");
  if (!(lambda_p > lambda && lambda_p <= 1.0))
    throw DomainError("pick_rho0: violated lambda' in (lambda, 1]");
  if (!(mu_p >= 1.0 && mu_p < mu)) throw DomainError("pick_rho0: violated mu' in [1, mu)");
  if (k < 1) throw DomainError("pick_rho0: violated k >= 1");

  double upper = 1.0;
  const double log_m = std::log(std::max(lambda, 1.0 / mu));  // < 0
  const double log_ratio = std::log(lambda_p / mu_p);         // <= 0
  if (log_ratio < 0.0) upper = std::min(upper, log_m / log_ratio);
  if (volume_mode) {
    if (std::log(lambda_p) < 0.0) upper = std::min(upper, k * std::log(lambda) / std::log(lambda_p));
    if (std::log(mu_p) > 0.0) upper = std::min(upper, k * std::log(mu) / std::log(mu_p));
  }
  if (!(upper > 0.0)) throw DomainError("pick_rho0: empty feasible interval for the domination condition");
  return {0.5 * upper, upper};
}

// ---------------------------------------------------------------------------

TransitClass classify(const TransitReport& r) {
  if (r.entry_sphere == Sphere::inner)
    return r.exit_sphere == Sphere::outer ? TransitClass::inner_to_outer : TransitClass::inner_to_inner;
  return r.exit_sphere == Sphere::inner ? TransitClass::outer_to_inner : TransitClass::outer_to_outer;
}

const char* to_string(TransitClass c) {
  switch (c) {
    case TransitClass::inner_to_outer: return "inner_to_outer";
    case TransitClass::outer_to_inner: return "outer_to_inner";
    case TransitClass::outer_to_outer: return "outer_to_outer";
    case TransitClass::inner_to_inner: return "inner_to_inner";
  }
  return "?";
}

TransitReport annulus_transit(const SaddleSpec& spec, const BumpProfile& profile, const Point& entry,
                              const TransitOptions& opts) {
  const int k = spec.k();
  const double delta = profile.delta();
  if (!(delta > 0.0)) throw DomainError("annulus_transit: profile has no annulus (delta = 0)");
  if (entry.size() != k) throw DomainError("annulus_transit: entry dimension does not match k");

  const double r0 = entry.norm();
  const double rel = 1e-9;
  TransitReport rep;
  rep.entry = entry;
  const double radial_speed = entry.dot(spec.field(entry));  // sign of d‖x‖²/dt
  if (std::abs(r0 - delta) <= rel * delta) {
    rep.entry_sphere = Sphere::inner;
    if (!(radial_speed > 0.0)) throw DomainError("annulus_transit: velocity at inner sphere does not point into the annulus");
  } else if (std::abs(r0 - 2.0 * delta) <= rel * delta) {
    rep.entry_sphere = Sphere::outer;
    if (!(radial_speed < 0.0)) throw DomainError("annulus_transit: velocity at outer sphere does not point into the annulus");
  } else {
    throw DomainError("annulus_transit: entry is not on an annulus boundary sphere");
  }

  ode::EventSpec ev;
  ev.t_tol = opts.event_tol;
  ev.g.emplace_back([k, delta](const ode::Vector& y) { return y.head(k).norm() - delta; });
  ev.g.emplace_back([k, delta](const ode::Vector& y) { return y.head(k).norm() - 2.0 * delta; });
  ev.initial_sign = {+1, -1};

  const double budget = 10.0 * std::log(2.0) / std::min(profile.rho0(), 1.0);
  const auto res = ode::integrate_to_event(variational_rhs(spec, profile),
                                           pack(entry, Matrix::Identity(k, k)), 0.0, budget,
                                           opts.step, ev);
  if (!res.event) {
    std::ostringstream msg;
    msg << "annulus_transit: no exit within budget " << budget << " (orbit near the stable manifold)";
    throw TransitBudgetError(msg.str(), res.t);
  }
  if (!res.y.allFinite()) throw NumericalError("annulus_transit: non-finite state");

  rep.exit = res.y.head(k);
  rep.exit_sphere = res.event->which == 0 ? Sphere::inner : Sphere::outer;
  rep.time = res.t;
  rep.jacobian = Eigen::Map<const Matrix>(res.y.data() + k, k, k);
  Eigen::JacobiSVD<Matrix> svd(rep.jacobian);
  rep.sigma_max = svd.singularValues()(0);
  rep.sigma_min = svd.singularValues()(k - 1);
  rep.distortion = std::max(rep.sigma_max, 1.0 / rep.sigma_min);

  const double c2 = std::max(std::abs(spec.min_rate()), std::abs(spec.max_rate()));
  // sup over the annulus of ‖∇ρ(x)‖·‖x‖ ≤ (1−ρ₀)·sup|S'|·2.
  const double grad_x = profile.kind() == BumpProfile::Kind::smooth
                            ? (1.0 - profile.rho0()) * BumpProfile::transition_slope_sup * 2.0
                            : 0.0;
  rep.witness_upper = std::exp(rep.time * (c2 * grad_x + std::max(0.0, spec.max_rate())));
  rep.witness_lower = std::exp(rep.time * (c2 * grad_x + std::max(0.0, -spec.min_rate())));
  rep.within_c5 = rep.sigma_max <= opts.c5 && rep.sigma_min >= 1.0 / opts.c5;
  return rep;
}

TransitCampaign transit_campaign(const SaddleSpec& spec, const BumpProfile& profile,
                                 std::size_t samples, std::uint64_t seed, const TransitOptions& opts) {
  const int k = spec.k();
  const double delta = profile.delta();
  struct Slot {
    std::optional<TransitReport> rep;
    bool excluded = false;
    bool inner = false;
  };
  std::vector<Slot> slots(samples);
  parallel_for(samples, [&](std::size_t i) {
    auto rng = sampling::make_rng(seed, i);
    Point d;
    double q = 0.0;
    do {
      d = sampling::unit_vector(rng, k);
      q = d.dot(spec.field(d));
    } while (std::abs(q) < 1e-9);
    const Point entry = (q > 0.0 ? delta : 2.0 * delta) * d;
    slots[i].inner = q > 0.0;
    try {
      slots[i].rep = annulus_transit(spec, profile, entry, opts);
    } catch (const TransitBudgetError&) {
      slots[i].excluded = true;
    }
  });

  TransitCampaign c;
  c.delta = delta;
  double t_sum = 0.0;
  c.time_min = std::numeric_limits<double>::infinity();
  for (auto& s : slots) {
    if (s.inner) ++c.inner_probes;
    if (s.excluded) {
      ++c.excluded;
      continue;
    }
    const TransitReport& r = *s.rep;
    ++c.counts[static_cast<int>(classify(r))];
    c.c5 = std::max(c.c5, r.distortion);
    c.time_min = std::min(c.time_min, r.time);
    c.time_max = std::max(c.time_max, r.time);
    t_sum += r.time;
    if (!r.within_c5) ++c.c5_violations;
    if (r.sigma_max > r.witness_upper * (1 + 1e-9) || 1.0 / r.sigma_min > r.witness_lower * (1 + 1e-9))
      ++c.witness_violations;
    c.transits.push_back(std::move(*s.rep));
  }
  if (!c.transits.empty()) c.time_mean = t_sum / static_cast<double>(c.transits.size());
  else c.time_min = 0.0;
  return c;
}

}  // namespace phsurgery::saddle
