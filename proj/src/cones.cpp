#include "phsurgery/cones.hpp"

#include "phsurgery/parallel.hpp"
#include "phsurgery/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace phsurgery::cones {

namespace {

constexpr std::size_t kMaxWitnesses = 16;
constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix block_tangent(const Matrix& d, const Matrix& n) {
  Matrix m = Matrix::Zero(d.rows() + n.rows(), d.cols() + n.cols());
  m.topLeftCorner(d.rows(), d.cols()) = d;
  m.bottomRightCorner(n.rows(), n.cols()) = n;
  return m;
}

Vector shift_vector(std::uint64_t seed, int dim) {
  auto rng = sampling::make_rng(seed, 0xC0DEull << 32);
  Vector s(2 * dim + 2);
  for (int i = 0; i < s.size(); ++i) s[i] = sampling::uniform(rng, 0.0, 1.0);
  return s;
}

std::vector<double> to_std(const Point& p) { return {p.data(), p.data() + p.size()}; }

void add_witness(std::vector<Witness>& out, Witness w) {
  if (out.size() < kMaxWitnesses) out.push_back(std::move(w));
}

}  // namespace

MetricSpec MetricSpec::weighted_blocks(double h, double stable, double center, double unstable) {
  MetricSpec m;
  m.kind = Kind::weighted;
  m.h = h;
  m.stable = stable;
  m.center = center;
  m.unstable = unstable;
  return m;
}

Vector MetricSpec::weights(const Layout& layout) const {
  Vector w = Vector::Ones(layout.dim());
  if (kind == Kind::product) return w;
  if (!(h > 0.0 && stable > 0.0 && center > 0.0 && unstable > 0.0))
    throw DomainError("metric: block weights must be positive");
  w.head(layout.k).setConstant(h);
  w.segment(layout.stable_begin(), layout.s).setConstant(stable);
  w[layout.center_index()] = center;
  w.segment(layout.unstable_begin(), layout.u).setConstant(unstable);
  return w;
}

double metric_norm(const Vector& v, const Vector& weights) {
  return std::sqrt((weights.array() * v.array().square()).sum());
}

ConeSpec::ConeSpec(Matrix c, double om) : center(std::move(c)), omega(om) {
  if (!(omega > 0.0 && omega < std::acos(-1.0) / 4)) throw DomainError("cone: omega must lie in (0, pi/4)");
  if (center.cols() < 1 || center.cols() > center.rows()) throw DomainError("cone: bad center basis shape");
  const Matrix gram = center.transpose() * center;
  if ((gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() > 1e-12)
    throw DomainError("cone: center basis is not orthonormal");
}

ConeSpec ConeSpec::unstable(const Layout& l, double omega) {
  Matrix c = Matrix::Zero(l.dim(), l.u);
  for (int j = 0; j < l.u; ++j) c(l.unstable_begin() + j, j) = 1.0;
  return ConeSpec(c, omega);
}

ConeSpec ConeSpec::center_stable(const Layout& l, double omega) {
  const int m = l.k + l.s + 1;
  Matrix c = Matrix::Zero(l.dim(), m);
  for (int j = 0; j < m; ++j) c(j, j) = 1.0;
  return ConeSpec(c, omega);
}

Cone::Cone(ConeSpec spec, Vector weights) : spec_(std::move(spec)) {
  const auto n = spec_.center.rows();
  if (weights.size() != n) throw DomainError("cone: metric dimension mismatch");
  if (!(weights.array() > 0.0).all()) throw DomainError("cone: metric weights must be positive");
  sqrt_w_ = weights.array().sqrt();
  const Matrix scaled = sqrt_w_.asDiagonal() * spec_.center;
  Eigen::HouseholderQR<Matrix> qr(scaled);
  const Matrix full = qr.householderQ() * Matrix::Identity(n, n);
  const auto m = spec_.center.cols();
  q_ = full.leftCols(m);
  perp_ = full.rightCols(n - m);
}

double Cone::angle(const Vector& v) const {
  if (v.size() != sqrt_w_.size()) throw DomainError("cone: vector dimension mismatch");
  const Vector s = sqrt_w_.cwiseProduct(v);
  if (s.norm() == 0.0) throw DomainError("cone: zero vector has no angle");
  const double along = (q_.transpose() * s).norm();
  const double across = (perp_.transpose() * s).norm();
  return std::atan2(across, along);
}

Vector Cone::sample(std::uint64_t i, double theta, const Vector& shift) const {
  const int m = static_cast<int>(q_.cols());
  const int r = static_cast<int>(perp_.cols());
  Vector s = q_ * sampling::quasi_unit_vector(i, m, shift.head(m + 1));
  if (r > 0 && theta != 0.0) {
    const Vector nrm = perp_ * sampling::quasi_unit_vector(i, r, shift.tail(r + 1));
    s = std::cos(theta) * s + std::sin(theta) * nrm;
  }
  return s.cwiseQuotient(sqrt_w_);
}

bool in_cone(const Vector& v, const ConeSpec& cone, const Vector& weights) {
  return Cone(cone, weights).contains(v);
}

// ---------------------------------------------------------------------------

TangentState TangentState::euclidean(FlowKind kind, Point x) {
  if (kind == FlowKind::lifted) throw DomainError("TangentState: lifted states take a chart point");
  TangentState s;
  s.kind = kind;
  s.x = std::move(x);
  return s;
}

TangentState TangentState::lifted(blowup::BlowupPoint p) {
  TangentState s;
  s.kind = FlowKind::lifted;
  s.p = std::move(p);
  return s;
}

Propagated propagate(const ProductModel& model, const TangentState& state, double t,
                     const Matrix& frame) {
  const Layout l = model.layout();
  if (frame.rows() != l.dim()) throw DomainError("propagate: frame dimension mismatch");
  Propagated out;
  out.end = state;
  Matrix d;
  if (state.kind == FlowKind::lifted) {
    const auto r = blowup::lifted_variational_flow(model.saddle, model.profile, state.p, t, model.step);
    out.end.p = r.p;
    d = r.jacobian;
  } else {
    const double delta = model.profile.delta();
    if (state.kind == FlowKind::inner_product && !(state.x.norm() <= delta))
      throw DomainError("propagate: inner-product state outside the delta ball");
    const auto r = saddle::variational_flow_slow(model.saddle, model.profile, state.x, t, {model.step});
    // ‖x(t)‖² = Σ e^{2ρ₀rᵢt}xᵢ² is convex in t, so the endpoints bound the orbit.
    if (state.kind == FlowKind::inner_product && !(r.x.norm() <= delta * (1 + 1e-12)))
      throw DomainError("propagate: inner-product orbit leaves the delta ball");
    out.end.x = r.x;
    d = r.jacobian;
  }
  out.tangent = block_tangent(d, model.anosov.cocycle(t));
  out.frame = out.tangent * frame;
  return out;
}

// ---------------------------------------------------------------------------
// Lemma 1

bool Lemma1Report::passed() const {
  return u_invariance_violations == 0 && cs_invariance_violations == 0 && expansion_violations == 0 &&
         domination_violations == 0 && min_expansion_exponent >= expansion_threshold && kappa_meas > 1.0;
}

namespace {

struct Lemma1Slot {
  double burn_in = 0.0;
  double min_exp = kInf;
  double log_kappa = kInf;
  std::size_t pairs = 0;
  std::size_t vectors = 0;
  std::size_t u_viol = 0, cs_viol = 0, exp_viol = 0, dom_viol = 0;
  std::vector<Witness> witnesses;
};

}  // namespace

Lemma1Report lemma1_campaign(const Lemma1Config& cfg) {
  const int k = cfg.saddle.k();
  if (!(cfg.t_min >= 1.0 && cfg.t_max >= cfg.t_min)) throw DomainError("lemma1: need 1 <= t_min <= t_max");
  if (!(cfg.grid > 0.0)) throw DomainError("lemma1: grid spacing must be positive");
  if (cfg.vectors < 1) throw DomainError("lemma1: need at least one vector per family");
  const Layout layout(k, cfg.anosov);
  const Vector w = cfg.metric.weights(layout);
  const Cone cu(ConeSpec::unstable(layout, cfg.omega), w);
  const Cone ccs(ConeSpec::center_stable(layout, cfg.omega), w);
  const ProductModel model{cfg.saddle, saddle::BumpProfile::uniform(cfg.rho0, cfg.delta), cfg.anosov, cfg.step};
  const Vector shift = shift_vector(cfg.seed, layout.dim());
  const double log_mu = std::log(cfg.anosov.mu);
  const double grow = std::max(std::abs(cfg.saddle.min_rate()), std::abs(cfg.saddle.max_rate()));
  const double r_max = cfg.delta * std::exp(-cfg.rho0 * grow * cfg.t_max) / (2.0 * std::sqrt(double(k)));
  const double theta_b = cfg.omega * (1.0 - 1e-6);
  const auto nv = static_cast<std::uint64_t>(cfg.vectors);

  std::vector<Lemma1Slot> slots(cfg.samples);
  parallel_for(cfg.samples, [&](std::size_t i) {
    Lemma1Slot& slot = slots[i];
    auto rng = sampling::make_rng(cfg.seed, i);
    blowup::BlowupPoint p{static_cast<int>(i % static_cast<std::size_t>(k)), Point(k)};
    for (int j = 0; j < k; ++j) p.u[j] = sampling::uniform(rng, -1.0, 1.0);
    p.u[p.chart] = i % 10 == 0 ? 0.0 : sampling::uniform(rng, -r_max, r_max);
    const double T = sampling::uniform(rng, cfg.t_min, cfg.t_max);

    std::vector<double> times{0.0};
    while (times.back() + cfg.grid < T - 1e-12) times.push_back(times.back() + cfg.grid);
    times.push_back(T);
    std::vector<Matrix> maps{Matrix::Identity(layout.dim(), layout.dim())};
    TangentState st = TangentState::lifted(p);
    for (std::size_t m = 1; m < times.size(); ++m) {
      const auto r = propagate(model, st, times[m] - times[m - 1], maps.back());
      maps.push_back(r.frame);
      st = r.end;
    }
    const Matrix& mt = maps.back();
    const Matrix mt_inv = mt.inverse();
    const std::size_t last = times.size() - 1;

    auto witness = [&](const char* check, double time, double value, double threshold) {
      add_witness(slot.witnesses, {check, i, time, value, threshold, to_std(p.u), p.chart});
    };

    // Forward invariance and expansion on ∂C^u at p.
    for (std::uint64_t j = 0; j < nv; ++j) {
      const Vector v = cu.sample(i * nv + j, theta_b, shift);
      ++slot.vectors;
      double tb = 0.0;
      for (std::size_t m = 1; m <= last; ++m)
        if (!cu.contains(maps[m] * v)) tb = m < last ? times[m + 1] : kInf;
      slot.burn_in = std::max(slot.burn_in, tb);
      if (tb > cfg.burn_in_limit) {
        ++slot.u_viol;
        witness("u_cone_forward_invariance", T, cu.angle(mt * v), cfg.omega);
      }
      const double e = std::log(metric_norm(mt * v, w) / metric_norm(v, w)) / T;
      slot.min_exp = std::min(slot.min_exp, e);
      if (e < log_mu - cfg.expansion_tol) {
        ++slot.exp_viol;
        witness("expansion", T, e, log_mu - cfg.expansion_tol);
      }
    }
    // Backward invariance on ∂C^cs at the end point.
    for (std::uint64_t j = 0; j < nv; ++j) {
      const Vector v = ccs.sample(i * nv + j, theta_b, shift);
      ++slot.vectors;
      double tb = 0.0;
      for (std::size_t m = last; m-- > 0;) {
        if (!ccs.contains(maps[m] * (mt_inv * v))) tb = m > 0 ? T - times[m - 1] : kInf;
      }
      slot.burn_in = std::max(slot.burn_in, tb);
      if (tb > cfg.burn_in_limit) {
        ++slot.cs_viol;
        witness("cs_cone_backward_invariance", T, ccs.angle(mt_inv * v), cfg.omega);
      }
    }
    // Domination against cs vectors whose image stays in C^cs.
    double worst_cs = -kInf;
    for (std::uint64_t j = 0; j < nv; ++j) {
      const double frac = static_cast<double>(j) / static_cast<double>(nv);
      const Vector v = ccs.sample(i * nv + j, cfg.omega * frac, shift);
      const Vector img = mt * v;
      if (!ccs.contains(img)) continue;
      ++slot.pairs;
      worst_cs = std::max(worst_cs, std::log(metric_norm(img, w) / metric_norm(v, w)) / T);
    }
    if (slot.pairs > 0) {
      slot.log_kappa = slot.min_exp - worst_cs;
      if (!(slot.log_kappa > 0.0)) {
        ++slot.dom_viol;
        witness("domination", T, slot.log_kappa, 0.0);
      }
    }
  });

  Lemma1Report rep;
  rep.samples = cfg.samples;
  rep.expansion_threshold = log_mu - cfg.expansion_tol;
  rep.min_expansion_exponent = kInf;
  rep.log_kappa = kInf;
  for (auto& s : slots) {
    rep.burn_in = std::max(rep.burn_in, s.burn_in);
    rep.min_expansion_exponent = std::min(rep.min_expansion_exponent, s.min_exp);
    rep.log_kappa = std::min(rep.log_kappa, s.log_kappa);
    rep.domination_pairs += s.pairs;
    rep.vectors_tested += s.vectors;
    rep.u_invariance_violations += s.u_viol;
    rep.cs_invariance_violations += s.cs_viol;
    rep.expansion_violations += s.exp_viol;
    rep.domination_violations += s.dom_viol;
    for (auto& wi : s.witnesses) add_witness(rep.witnesses, std::move(wi));
  }
  rep.mu_meas = std::exp(rep.min_expansion_exponent);
  rep.kappa_meas = std::exp(rep.log_kappa);
  return rep;
}

// ---------------------------------------------------------------------------
// Lemma 3

Lemma3Report lemma3_campaign(const Lemma3Config& cfg, double delta) {
  const int k = cfg.saddle.k();
  const Layout layout(k, cfg.anosov);
  const Vector w = cfg.metric.weights(layout);
  const Cone cu(ConeSpec::unstable(layout, cfg.omega), w);
  const Cone ccs(ConeSpec::center_stable(layout, cfg.omega), w);
  const saddle::BumpProfile profile =
      cfg.slowdown ? saddle::BumpProfile(delta, cfg.rho0) : saddle::BumpProfile::uniform(1.0, delta);
  saddle::TransitOptions topts;
  topts.step = cfg.step;
  const auto tc = saddle::transit_campaign(cfg.saddle, profile, cfg.samples, cfg.seed, topts);
  const Vector shift = shift_vector(cfg.seed, layout.dim());
  const double theta_b = cfg.omega * (1.0 - 1e-6);
  const auto nv = static_cast<std::uint64_t>(std::max(cfg.vectors, 1));

  struct Slot {
    double c6u = 0, c6cs = 0, c7u = kInf, c7cs = kInf;
  };
  std::vector<Slot> slots(tc.transits.size());
  parallel_for(tc.transits.size(), [&](std::size_t i) {
    const auto& tr = tc.transits[i];
    const Matrix m = block_tangent(tr.jacobian, cfg.anosov.cocycle(tr.time));
    const Matrix minv = m.inverse();
    Slot& s = slots[i];
    for (std::uint64_t j = 0; j < nv; ++j) {
      const Vector v = cu.sample(i * nv + j, theta_b, shift);
      const Vector img = m * v;
      s.c6u = std::max(s.c6u, cu.angle(img) / cfg.omega);
      s.c7u = std::min(s.c7u, metric_norm(img, w) / metric_norm(v, w));
      const Vector c = ccs.sample(i * nv + j, theta_b, shift);
      const Vector back = minv * c;
      s.c6cs = std::max(s.c6cs, ccs.angle(back) / cfg.omega);
      s.c7cs = std::min(s.c7cs, metric_norm(back, w) / metric_norm(c, w));
    }
  });

  Lemma3Report rep;
  rep.delta = delta;
  rep.transits = tc.transits.size();
  rep.excluded = tc.excluded;
  for (int c = 0; c < 4; ++c) rep.counts[c] = tc.counts[c];
  rep.inner_probes = tc.inner_probes;
  rep.time_min = tc.time_min;
  rep.time_mean = tc.time_mean;
  rep.time_max = tc.time_max;
  rep.c5 = tc.c5;
  rep.c7_u = rep.c7_cs = slots.empty() ? 0.0 : kInf;
  for (const auto& s : slots) {
    rep.c6_u = std::max(rep.c6_u, s.c6u);
    rep.c6_cs = std::max(rep.c6_cs, s.c6cs);
    rep.c7_u = std::min(rep.c7_u, s.c7u);
    rep.c7_cs = std::min(rep.c7_cs, s.c7cs);
  }
  return rep;
}

Lemma3Sweep lemma3_sweep(const Lemma3Config& cfg, const std::vector<double>& deltas) {
  if (deltas.empty()) throw DomainError("lemma3_sweep: no delta values");
  Lemma3Sweep sw;
  double c6lo = kInf, c6hi = 0, c7lo = kInf, c7hi = 0, c5lo = kInf, c5hi = 0;
  sw.all_classes_exercised = true;
  for (double d : deltas) {
    sw.per_delta.push_back(lemma3_campaign(cfg, d));
    const auto& r = sw.per_delta.back();
    c6lo = std::min(c6lo, r.c6());
    c6hi = std::max(c6hi, r.c6());
    c7lo = std::min(c7lo, r.c7());
    c7hi = std::max(c7hi, r.c7());
    c5lo = std::min(c5lo, r.c5);
    c5hi = std::max(c5hi, r.c5);
    using saddle::TransitClass;
    const bool seen = r.counts[int(TransitClass::inner_to_outer)] > 0 &&
                      r.counts[int(TransitClass::outer_to_inner)] > 0 &&
                      r.counts[int(TransitClass::outer_to_outer)] > 0 && r.inner_probes > 0;
    sw.all_classes_exercised = sw.all_classes_exercised && seen;
  }
  sw.c6_factor = c6hi / c6lo;
  sw.c7_factor = c7hi / c7lo;
  sw.c5_factor = c5hi / c5lo;
  return sw;
}

// ---------------------------------------------------------------------------
// Eq. (1) chain

bool ChainReport::passed() const {
  return std::all_of(regions.begin(), regions.end(), [](const ChainRegion& r) { return r.passed; });
}

ChainReport ph_inequality_check(const saddle::SaddleSpec& saddle, const saddle::AnosovModel& anosov,
                                double rho0, double delta, std::size_t samples, std::uint64_t seed,
                                std::vector<double> times) {
  for (double t : times)
    if (!(t >= 1.0)) throw DomainError("ph_inequality_check: segment lengths must be >= 1");
  std::sort(times.begin(), times.end());
  const int k = saddle.k();
  const Layout l(k, anosov);
  const double log_l = std::log(anosov.lambda);
  const double log_m = std::log(anosov.mu);
  const double slack = 1e-12;

  enum class Region { far, inner, exceptional };
  ChainReport rep;
  for (Region region : {Region::far, Region::inner, Region::exceptional}) {
    ChainRegion cr;
    cr.name = region == Region::far ? "far" : region == Region::inner ? "inner" : "exceptional";
    cr.log_lambda = log_l;
    cr.log_mu = log_m;
    cr.stable_max = -kInf;
    cr.center_max = -kInf;
    cr.center_min = kInf;
    cr.unstable_min = kInf;
    const ProductModel model{saddle,
                             saddle::BumpProfile::uniform(region == Region::far ? 1.0 : rho0, delta),
                             anosov, 1e-3};
    auto rng = sampling::make_rng(seed, static_cast<std::uint64_t>(region));
    for (std::size_t n = 0; n < samples; ++n) {
      TangentState st;
      if (region == Region::exceptional) {
        blowup::BlowupPoint p{static_cast<int>(n % static_cast<std::size_t>(k)), sampling::uniform_box(rng, k, 1.0)};
        p.u[p.chart] = 0.0;
        st = TangentState::lifted(p);
      } else {
        st = TangentState::euclidean(FlowKind::annulus, sampling::unit_vector(rng, k) * 1e-3 * delta);
      }
      Vector vs = Vector::Zero(l.dim()), vc = Vector::Zero(l.dim()), vu = Vector::Zero(l.dim());
      vs.segment(l.stable_begin(), l.s) = sampling::unit_vector(rng, l.s);
      const Vector c = sampling::unit_vector(rng, k + 1);
      vc.head(k) = c.head(k);
      vc[l.center_index()] = c[k];
      vu.segment(l.unstable_begin(), l.u) = sampling::unit_vector(rng, l.u);
      Matrix frame(l.dim(), 3);
      frame << vs, vc, vu;
      // Chain the segments so each sample integrates up to max(times) once.
      TangentState cur = st;
      Matrix img = frame;
      double reached = 0.0;
      for (double t : times) {
        const auto seg = propagate(model, cur, t - reached, img);
        cur = seg.end;
        img = seg.frame;
        reached = t;
        const double es = std::log(img.col(0).norm()) / t;
        const double ec = std::log(img.col(1).norm()) / t;
        const double eu = std::log(img.col(2).norm()) / t;
        cr.stable_max = std::max(cr.stable_max, es);
        cr.center_min = std::min(cr.center_min, ec);
        cr.center_max = std::max(cr.center_max, ec);
        cr.unstable_min = std::min(cr.unstable_min, eu);
        std::vector<double> start = st.kind == FlowKind::lifted ? to_std(st.p.u) : to_std(st.x);
        const int chart = st.kind == FlowKind::lifted ? st.p.chart : -1;
        if (es > log_l + slack) add_witness(cr.witnesses, {"stable_below_lambda", n, t, es, log_l, start, chart});
        if (!(ec > log_l)) add_witness(cr.witnesses, {"center_above_lambda", n, t, ec, log_l, start, chart});
        if (!(ec < log_m)) add_witness(cr.witnesses, {"center_below_mu", n, t, ec, log_m, start, chart});
        if (eu < log_m - slack) add_witness(cr.witnesses, {"unstable_above_mu", n, t, eu, log_m, start, chart});
      }
      ++cr.samples;
    }
    cr.passed = cr.stable_max <= log_l + slack && cr.center_min > log_l && cr.center_max < log_m &&
                cr.unstable_min >= log_m - slack;
    rep.regions.push_back(std::move(cr));
  }
  return rep;
}

}  // namespace phsurgery::cones
