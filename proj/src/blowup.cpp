#include "phsurgery/blowup.hpp"

#include "phsurgery/ode.hpp"
#include "phsurgery/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace phsurgery::blowup {

namespace {

void check_chart(int chart, int k) {
  if (chart < 0 || chart >= k) throw DomainError("blowup: chart index out of range");
}

std::vector<D1> seeded_vector(const Point& u, int dir) {
  std::vector<D1> v(static_cast<std::size_t>(u.size()));
  for (int j = 0; j < u.size(); ++j) v[static_cast<std::size_t>(j)] = D1(u[j], j == dir ? 1.0 : 0.0);
  return v;
}

template <typename F>
Matrix forward_jacobian(const Point& u, F&& f) {
  const int k = static_cast<int>(u.size());
  Matrix jac(k, k);
  for (int c = 0; c < k; ++c) {
    const auto v = seeded_vector(u, c);
    const std::vector<D1> out = f(std::span<const D1>(v));
    for (int r = 0; r < k; ++r) jac(r, c) = out[static_cast<std::size_t>(r)].eps;
  }
  return jac;
}

Point to_point(const std::vector<double>& v) {
  return Eigen::Map<const Point>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::span<const double> as_span(const Point& p) {
  return {p.data(), static_cast<std::size_t>(p.size())};
}

}  // namespace

Point blowdown(const BlowupPoint& p) {
  check_chart(p.chart, p.k());
  return to_point(chart_map<double>(p.chart, as_span(p.u)));
}

Point line(const BlowupPoint& p) {
  check_chart(p.chart, p.k());
  Point l = p.u;
  l[p.chart] = 1.0;
  return l;
}

int dominant_chart(const Point& v) {
  int best = 0;
  for (int j = 1; j < v.size(); ++j)
    if (std::abs(v[j]) > std::abs(v[best])) best = j;
  return best;
}

BlowupPoint lift(const Point& x) {
  if (x.size() < 1 || x.cwiseAbs().maxCoeff() == 0.0)
    throw DomainError("lift: the origin has no canonical lift");
  BlowupPoint p;
  p.chart = dominant_chart(x);
  p.u = x / x[p.chart];
  p.u[p.chart] = x[p.chart];
  return p;
}

BlowupPoint chart_transition(const BlowupPoint& p, int target) {
  const int k = p.k();
  check_chart(p.chart, k);
  check_chart(target, k);
  if (target == p.chart) return p;
  const double lt = p.u[target];
  if (lt == 0.0) {
    std::ostringstream msg;
    msg << "chart_transition: line coordinate " << target << " vanishes";
    throw DomainError(msg.str());
  }
  BlowupPoint q;
  q.chart = target;
  q.u.resize(k);
  for (int j = 0; j < k; ++j) {
    if (j == target)
      q.u[j] = p.u[p.chart] * lt;
    else if (j == p.chart)
      q.u[j] = 1.0 / lt;
    else
      q.u[j] = p.u[j] / lt;
  }
  return q;
}

BlowupPoint canonical(const BlowupPoint& p) {
  return chart_transition(p, dominant_chart(line(p)));
}

Matrix chart_jacobian(const BlowupPoint& p) {
  check_chart(p.chart, p.k());
  return forward_jacobian(p.u, [&](std::span<const D1> u) { return chart_map<D1>(p.chart, u); });
}

Matrix transition_jacobian(const BlowupPoint& p, int target) {
  const int k = p.k();
  check_chart(p.chart, k);
  check_chart(target, k);
  if (target == p.chart) return Matrix::Identity(k, k);
  if (p.u[target] == 0.0) throw DomainError("transition_jacobian: line coordinate vanishes");
  const int i = p.chart;
  return forward_jacobian(p.u, [&](std::span<const D1> u) {
    std::vector<D1> q(u.size());
    const D1 lt = u[static_cast<std::size_t>(target)];
    for (std::size_t j = 0; j < u.size(); ++j) {
      const int jj = static_cast<int>(j);
      if (jj == target)
        q[j] = u[static_cast<std::size_t>(i)] * lt;
      else if (jj == i)
        q[j] = 1.0 / lt;
      else
        q[j] = u[j] / lt;
    }
    return q;
  });
}

Point lifted_field(const saddle::SaddleSpec& spec, const saddle::BumpProfile& profile,
                   const BlowupPoint& p) {
  check_chart(p.chart, p.k());
  if (p.k() != spec.k()) throw DomainError("lifted_field: dimension mismatch");
  return to_point(lifted_field<double>(spec, profile, p.chart, as_span(p.u)));
}

Matrix lifted_field_jacobian(const saddle::SaddleSpec& spec, const saddle::BumpProfile& profile,
                             const BlowupPoint& p) {
  check_chart(p.chart, p.k());
  if (p.k() != spec.k()) throw DomainError("lifted_field_jacobian: dimension mismatch");
  return forward_jacobian(
      p.u, [&](std::span<const D1> u) { return lifted_field<D1>(spec, profile, p.chart, u); });
}

BlowupPoint lifted_slow_flow(const saddle::SaddleSpec& spec, const saddle::BumpProfile& profile,
                             const BlowupPoint& p, double t, const LiftOptions& opts) {
  const int k = spec.k();
  if (p.k() != k) throw DomainError("lifted_slow_flow: dimension mismatch");
  check_chart(p.chart, k);
  if (!(blowdown(p).norm() < 1.0)) throw DomainError("lifted_slow_flow: start outside the atlas");
  BlowupPoint cur = p;
  if (t == 0.0) return cur;
  const auto n = static_cast<std::size_t>(std::ceil(std::abs(t) / opts.step - 1e-12));
  const double h = t / static_cast<double>(n);
  for (std::size_t s = 0; s < n; ++s) {
    const int chart = cur.chart;
    const ode::Rhs f = [&](double, const ode::Vector& u) {
      return to_point(lifted_field<double>(spec, profile, chart, as_span(u)));
    };
    cur.u = ode::rk4_step(f, 0.0, cur.u, h);
    if (!cur.u.allFinite()) throw NumericalError("lifted_slow_flow: non-finite chart coordinates");
    const Point l = line(cur);
    if (l.cwiseAbs().maxCoeff() > opts.switch_threshold) cur = chart_transition(cur, dominant_chart(l));
    if (!(blowdown(cur).norm() < 1.0)) {
      const double te = h * static_cast<double>(s + 1);
      std::ostringstream msg;
      msg << "lifted_slow_flow: orbit left the atlas domain at t = " << te;
      throw EscapeError(msg.str(), te);
    }
  }
  return cur;
}

LiftedVariational lifted_variational_flow(const saddle::SaddleSpec& spec,
                                          const saddle::BumpProfile& profile, const BlowupPoint& p,
                                          double t, double step) {
  const int k = spec.k();
  if (p.k() != k) throw DomainError("lifted_variational_flow: dimension mismatch");
  check_chart(p.chart, k);
  const int chart = p.chart;
  const ode::Rhs f = [&](double, const ode::Vector& y) {
    BlowupPoint q{chart, y.head(k)};
    const Eigen::Map<const Matrix> j(y.data() + k, k, k);
    ode::Vector dy(y.size());
    dy.head(k) = to_point(lifted_field<double>(spec, profile, chart, as_span(q.u)));
    const Matrix dj = lifted_field_jacobian(spec, profile, q) * j;
    dy.tail(k * k) = Eigen::Map<const Eigen::VectorXd>(dj.data(), k * k);
    return dy;
  };
  ode::Vector y0(k + k * k);
  y0.head(k) = p.u;
  const Matrix id = Matrix::Identity(k, k);
  y0.tail(k * k) = Eigen::Map<const Eigen::VectorXd>(id.data(), k * k);
  const auto traj = ode::integrate(f, y0, 0.0, t, step, [&](double, const ode::Vector& y) {
    return y.allFinite() && blowdown(BlowupPoint{chart, y.head(k)}).norm() < 1.0;
  });
  if (traj.stopped) {
    std::ostringstream msg;
    msg << "lifted_variational_flow: orbit left the chart domain at t = " << traj.t;
    throw EscapeError(msg.str(), traj.t);
  }
  LiftedVariational out;
  out.p = BlowupPoint{chart, traj.y.head(k)};
  out.jacobian = Eigen::Map<const Matrix>(traj.y.data() + k, k, k);
  return out;
}

double pullback_volume_density(const BlowupPoint& p) {
  check_chart(p.chart, p.k());
  return std::pow(p.u[p.chart], p.k() - 1);
}

// ---------------------------------------------------------------------------

KLStructure::KLStructure(int k_, double alpha_) : k(k_), alpha(alpha_) {
  if (k < 1) throw DomainError("KLStructure: k must be positive");
  if (!(alpha > -1.0 && alpha <= 0.0)) throw DomainError("KLStructure: alpha must lie in (-1, 0]");
}

KLStructure KLStructure::volume_preserving(int k) {
  return KLStructure(k, -static_cast<double>(k - 1) / k);
}

Point kl_chart_map(const KLStructure& kl, const BlowupPoint& p) {
  check_chart(p.chart, p.k());
  return to_point(kl_chart_map<double>(kl, p.chart, as_span(p.u)));
}

BlowupPoint kl_chart_inverse(const KLStructure& kl, const Point& y, int chart) {
  check_chart(chart, static_cast<int>(y.size()));
  const double ny = y.norm();
  if (ny == 0.0 || y[chart] == 0.0)
    throw DomainError("kl_chart_inverse: point has no preimage off the exceptional set");
  // ‖Φ(x)‖ = ‖x‖^{1+α} and Φ preserves rays, so x = ‖x‖·y/‖y‖.
  const double nx = std::pow(ny, 1.0 / (1.0 + kl.alpha));
  const Point x = (nx / ny) * y;
  BlowupPoint p;
  p.chart = chart;
  p.u = x / x[chart];
  p.u[chart] = x[chart];
  return p;
}

double kl_density(const KLStructure& kl, const BlowupPoint& p) {
  check_chart(p.chart, p.k());
  const int k = p.k();
  double q = 1.0;
  for (int j = 0; j < k; ++j)
    if (j != p.chart) q += p.u[j] * p.u[j];
  const double f = std::pow(q, 0.5 * kl.alpha);
  const double ui = p.u[p.chart];
  // |u_i|^{kα}·u_i^{k−1} = sign(u_i)^{k−1}·|u_i|^{kα+k−1}; the combined
  // exponent avoids 0·∞ on the exceptional set when it vanishes.
  const double sign = (ui < 0.0 && (k - 1) % 2 == 1) ? -1.0 : 1.0;
  double e = k * kl.alpha + k - 1;
  if (std::abs(e) < 1e-12) e = 0.0;
  return (kl.alpha + 1.0) * std::pow(f, k) * sign * std::pow(std::abs(ui), e);
}

double new_norm(const KLStructure& kl, const Point& x) {
  const double n = x.norm();
  return n == 0.0 ? 0.0 : std::pow(n, 1.0 + kl.alpha);
}

double kl_density_box_minimum(const KLStructure& kl, int points) {
  if (points < 2) throw DomainError("kl_density_box_minimum: need at least two nodes per axis");
  const int k = kl.k;
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> idx(static_cast<std::size_t>(k), 0);
  const auto node = [&](int i) { return -1.0 + 2.0 * i / (points - 1); };
  while (true) {
    BlowupPoint p;
    p.chart = 0;
    p.u.resize(k);
    for (int j = 0; j < k; ++j) p.u[j] = node(idx[static_cast<std::size_t>(j)]);
    if (p.u[0] != 0.0 || k * kl.alpha + k - 1 == 0.0) best = std::min(best, std::abs(kl_density(kl, p)));
    int j = 0;
    while (j < k && ++idx[static_cast<std::size_t>(j)] == points) idx[static_cast<std::size_t>(j++)] = 0;
    if (j == k) break;
  }
  return best;
}

KLRateReport kl_rate_check(const saddle::SaddleSpec& spec, const KLStructure& kl,
                           const saddle::BumpProfile& profile, std::vector<double> times,
                           std::size_t samples, std::uint64_t seed) {
  if (kl.k != spec.k()) throw DomainError("kl_rate_check: dimension mismatch");
  if (times.empty()) throw DomainError("kl_rate_check: no times given");
  const int k = spec.k();
  const double rho0 = profile.rho0();
  const double delta = profile.delta() > 0.0 ? profile.delta() : 0.5;
  const double tmax = *std::max_element(times.begin(), times.end());
  const double grow = std::max(std::abs(spec.min_rate()), std::abs(spec.max_rate()));
  const double radius = 0.5 * delta * std::exp(-rho0 * grow * tmax);
  const double p1 = 1.0 + kl.alpha;
  const double c = spec.c();

  KLRateReport rep;
  rep.times = times;
  auto rng = sampling::make_rng(seed, 0);
  std::vector<Point> starts;
  for (std::size_t s = 0; s < samples; ++s) {
    Point x = sampling::unit_vector(rng, k) * radius * sampling::uniform(rng, 0.1, 1.0);
    starts.push_back(x);
  }
  for (double t : times) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& x : starts) {
      const Point y = saddle::flow_slow(spec, profile, x, t);
      const double r = new_norm(kl, y) / new_norm(kl, x);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    const double bl = std::pow(c, -p1) * std::pow(spec.lambda_prime(), rho0 * t * p1);
    const double bu = std::pow(c, p1) * std::pow(spec.mu_prime(), rho0 * t * p1);
    rep.ratio_min.push_back(lo);
    rep.ratio_max.push_back(hi);
    rep.bound_lower.push_back(bl);
    rep.bound_upper.push_back(bu);
    if (lo < bl * (1 - 1e-9) || hi > bu * (1 + 1e-9)) rep.within_bounds = false;
  }
  // Least-squares slope of log ratio against t on the top unstable axis.
  int top = 0;
  for (int j = 1; j < k; ++j)
    if (spec.rate(j) > spec.rate(top)) top = j;
  Point axis = Point::Zero(k);
  axis[top] = radius;
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (double t : times) {
    const double y = std::log(new_norm(kl, saddle::flow_slow(spec, profile, axis, t)) / new_norm(kl, axis));
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
  }
  const double m = static_cast<double>(times.size());
  const double den = m * stt - st * st;
  rep.unstable_axis_slope = den != 0.0 ? (m * sty - st * sy) / den : sy / st;
  rep.expected_slope = rho0 * p1 * spec.rate(top);
  return rep;
}

Remark2Report remark2_density_probe(int k, const std::function<double(const Point&)>& beta,
                                    double cap) {
  if (k < 2) throw DomainError("remark2_density_probe: need k >= 2");
  const KLStructure kl = KLStructure::volume_preserving(k);
  Remark2Report rep;
  rep.k = k;
  auto factor = [&](double r) {
    BlowupPoint p{0, Point::Zero(k)};
    p.u[0] = r;
    return beta(kl_chart_map(kl, p));
  };
  for (int e = 2; e <= 6; ++e) {
    const double r = std::pow(10.0, -e);
    const double h = 1e-3 * r;
    const double d = std::abs(factor(r + h) - factor(r - h)) / (2 * h);
    rep.radii.push_back(r);
    rep.derivatives.push_back(d);
    if (!(d <= cap)) rep.bounded = false;
  }
  // Slope of log|derivative| against log r; constant derivatives give 0.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double tiny = 1e-300;
  for (std::size_t i = 0; i < rep.radii.size(); ++i) {
    const double x = std::log(rep.radii[i]);
    const double y = std::log(std::max(rep.derivatives[i], tiny));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(rep.radii.size());
  bool all_zero = std::all_of(rep.derivatives.begin(), rep.derivatives.end(),
                              [](double d) { return d == 0.0; });
  rep.slope = all_zero ? 0.0 : (m * sxy - sx * sy) / (m * sxx - sx * sx);
  // A derivative growing like a negative power of r has no finite limit.
  if (rep.slope < -0.05) rep.bounded = false;
  return rep;
}

}  // namespace phsurgery::blowup
