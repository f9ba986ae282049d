#include "phsurgery/suites.hpp"

#include "phsurgery/blowup.hpp"
#include "phsurgery/cones.hpp"
#include "phsurgery/errors.hpp"
#include "phsurgery/forms.hpp"
#include "phsurgery/homogeneous.hpp"
#include "phsurgery/sampling.hpp"
#include "phsurgery/saddle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace phsurgery::suites {

using saddle::AnosovModel;
using saddle::BumpProfile;
using saddle::Matrix;
using saddle::Point;
using saddle::SaddleSpec;

namespace {

constexpr std::size_t kMaxWitnesses = 16;

bool holds(double v, const std::string& rel, double thr) {
  if (std::isnan(v)) return false;
  if (rel == "<") return v < thr;
  if (rel == "<=") return v <= thr;
  if (rel == ">") return v > thr;
  return v >= thr;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// Builder that keeps checks, constants and stage timings in insertion order.
class Recorder {
 public:
  explicit Recorder(std::string name) { out_.name = std::move(name); }

  Check& check(const std::string& name, double value, const std::string& rel, double thr,
               bool advisory = false) {
    Check c;
    c.name = out_.name + "." + name;
    c.value = value;
    c.relation = rel;
    c.threshold = thr;
    c.passed = holds(value, rel, thr);
    c.advisory = advisory;
    out_.checks.push_back(std::move(c));
    return out_.checks.back();
  }
  Check& flag(const std::string& name, bool ok, bool advisory = false) {
    return check(name, ok ? 1.0 : 0.0, ">=", 1.0, advisory);
  }
  void constant(const std::string& name, const std::string& anchor, double value) {
    out_.constants.push_back({out_.name + "." + name, anchor, value});
  }
  Table& table(const std::string& name, std::vector<std::string> columns) {
    out_.tables.push_back({out_.name + "." + name, std::move(columns), {}});
    return out_.tables.back();
  }

  // Runs one stage; model-level errors become a failing check carrying the
  // message as its witness so that the remaining stages still run.
  void stage(const std::string& name, const std::function<void()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      body();
    } catch (const EscapeError& e) {
      fail(name, e.what(), e.escape_time());
    } catch (const DomainError& e) {
      fail(name, e.what(), 0.0);
    } catch (const NumericalError& e) {
      fail(name, e.what(), 0.0);
    }
    out_.seconds[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  SuiteResult finish() { return std::move(out_); }

 private:
  void fail(const std::string& name, const std::string& what, double time) {
    Check& c = check(name + ".error", 1.0, "<", 1.0);
    Witness w;
    w.description = what;
    w.time = time;
    c.witnesses.push_back(std::move(w));
  }

  SuiteResult out_;
};

void attach(Check& c, const std::vector<cones::Witness>& ws, const std::string& kind = "") {
  for (const auto& w : ws) {
    if (c.witnesses.size() >= kMaxWitnesses) break;
    if (!kind.empty() && w.check != kind) continue;
    Witness out;
    std::ostringstream d;
    d << w.check << " (sample " << w.sample << ")";
    out.description = d.str();
    out.point = w.start;
    out.value = w.value;
    out.threshold = w.threshold;
    out.time = w.time;
    out.chart = w.chart;
    c.witnesses.push_back(std::move(out));
  }
}

Witness point_witness(const std::string& what, const Point& x, double value, double thr, double t = 0.0,
                      int chart = -1) {
  Witness w;
  w.description = what;
  w.point = to_std(x);
  w.value = value;
  w.threshold = thr;
  w.time = t;
  w.chart = chart;
  return w;
}

// Tracks the worst sample of a campaign together with its location.
struct Worst {
  double value = 0.0;
  Point where;
  double time = 0.0;
  int chart = -1;
  void offer(double v, const Point& x, double t = 0.0, int c = -1) {
    if (!(v <= value)) {
      value = v;
      where = x;
      time = t;
      chart = c;
    }
  }
  void witness_if_failed(Check& c, const std::string& what) const {
    if (!c.passed && where.size() > 0) c.witnesses.push_back(point_witness(what, where, value, c.threshold, time, chart));
  }
};

SaddleSpec make_saddle(const Config& cfg) { return SaddleSpec(cfg.saddle_rates); }

AnosovModel make_anosov(const Config& cfg) {
  const double smax = *std::max_element(cfg.anosov_stable.begin(), cfg.anosov_stable.end());
  const double umin = *std::min_element(cfg.anosov_unstable.begin(), cfg.anosov_unstable.end());
  return AnosovModel(cfg.anosov_stable, cfg.anosov_unstable, cfg.lambda.value_or(std::exp(smax)),
                     cfg.mu.value_or(std::exp(umin)));
}

template <typename F>
Matrix central_jacobian(F&& f, const Point& x, double h) {
  const Point f0 = f(x);
  Matrix j(f0.size(), x.size());
  for (int c = 0; c < x.size(); ++c) {
    Point a = x, b = x;
    a[c] += h;
    b[c] -= h;
    j.col(c) = (f(a) - f(b)) / (2 * h);
  }
  return j;
}

double rel(const Point& a, const Point& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace

bool SuiteResult::passed(bool strict) const {
  return std::all_of(checks.begin(), checks.end(), [&](const Check& c) { return c.passed || (c.advisory && !strict); });
}

const Check* SuiteResult::find(const std::string& check) const {
  for (const auto& c : checks)
    if (c.name == check) return &c;
  return nullptr;
}

const Constant* SuiteResult::constant(const std::string& n) const {
  for (const auto& c : constants)
    if (c.name == n) return &c;
  return nullptr;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"verify-saddle", "verify-blowup", "verify-cones",
                                              "verify-volume", "verify-moser",  "verify-homogeneous"};
  return names;
}

double resolved_rho0(const Config& cfg) {
  if (cfg.rho0) return *cfg.rho0;
  const SaddleSpec s = make_saddle(cfg);
  const AnosovModel a = make_anosov(cfg);
  return saddle::pick_rho0(a.lambda, a.mu, s.lambda_prime(), s.mu_prime(), s.k(), false).rho0;
}

double resolved_alpha(const Config& cfg) {
  if (cfg.alpha) return *cfg.alpha;
  const double k = static_cast<double>(cfg.saddle_rates.size());
  return -(k - 1.0) / k;
}

// ---------------------------------------------------------------------------

SuiteResult verify_saddle(const Config& cfg) {
  Recorder rec("saddle");
  const SaddleSpec spec = make_saddle(cfg);
  const AnosovModel an = make_anosov(cfg);
  const double rho0 = resolved_rho0(cfg);
  const int k = spec.k();

  rec.stage("rho0", [&] {
    const auto choice = saddle::pick_rho0(an.lambda, an.mu, spec.lambda_prime(), spec.mu_prime(), k, false);
    rec.constant("rho0", "slow-down factor rho0", rho0);
    rec.constant("rho0_upper", "supremum of the feasible rho0 interval for domination", choice.upper);
    rec.check("rho0.feasible", rho0, "<", choice.upper);
    const double lhs = rho0 * std::log(spec.lambda_prime() / spec.mu_prime());
    rec.constant("domination_margin", "log((lambda'/mu')^rho0) - log max(lambda, 1/mu)",
                 lhs - std::log(std::max(an.lambda, 1.0 / an.mu)));
  });

  rec.stage("bump", [&] {
    const BumpProfile p(cfg.delta, rho0);
    const double d = cfg.delta;
    const double err = std::max({std::abs(p.radial(d) - rho0), std::abs(p.radial(2 * d) - 1.0),
                                 std::abs(p.radial(1.5 * d) - (rho0 + 0.5 * (1 - rho0)))});
    rec.check("bump.values", err, "<=", 1e-14);
    double slope = 0.0;
    for (int i = 0; i <= 2000; ++i) slope = std::max(slope, std::abs(p.radial_derivative(d * (1 + i / 2000.0))));
    rec.constant("bump_slope_sup", "sup |d rho / ds| times delta over (1 - rho0)", slope * d / (1 - rho0));
    rec.check("bump.slope", slope * d / (1 - rho0), "<=", BumpProfile::transition_slope_sup * (1 + 1e-9));
    rec.check("bump.gradient_bound", slope * d, "<=", 1.0 + 1e-12);
  });

  rec.stage("flow", [&] {
    const BumpProfile p(cfg.delta, rho0);
    auto rng = sampling::make_rng(cfg.seed, 0x5344);
    Worst rich, jac;
    for (std::size_t i = 0; i < cfg.samples.oracle; ++i) {
      const Point x = 0.5 * cfg.delta * sampling::unit_vector(rng, k);
      const Point a = saddle::flow_slow(spec, p, x, 4.0, {1e-3});
      const Point b = saddle::flow_slow(spec, p, x, 4.0, {5e-4});
      rich.offer(rel(a, b), x, 4.0);

      const Point y = cfg.delta * sampling::uniform(rng, 1.0, 2.0) * sampling::unit_vector(rng, k);
      const auto v = saddle::variational_flow_slow(spec, p, y, 1.0);
      const Matrix fd = central_jacobian([&](const Point& z) { return saddle::flow_slow(spec, p, z, 1.0); }, y, 1e-6);
      jac.offer((fd - v.jacobian).norm() / v.jacobian.norm(), y, 1.0);
    }
    rich.witness_if_failed(rec.check("flow.richardson", rich.value, "<", cfg.tol.richardson), "half-step disagreement");
    jac.witness_if_failed(rec.check("variational.jacobian_fd", jac.value, "<", cfg.tol.jacobian),
                          "variational Jacobian against central differences");
  });

  rec.stage("transit", [&] {
    Table& tab = rec.table("transit_sweep", {"delta", "transits", "excluded", "c5", "time_min", "time_mean",
                                             "time_max", "inner_to_outer", "outer_to_inner", "outer_to_outer",
                                             "inner_to_inner"});
    double c5_lo = std::numeric_limits<double>::infinity(), c5_hi = 0.0;
    std::size_t c5_bad = 0, witness_bad = 0, inner_inner = 0, excluded = 0;
    std::size_t realizable = std::numeric_limits<std::size_t>::max();
    std::vector<Witness> bad;
    std::vector<double> logs, means;
    for (double delta : cfg.deltas) {
      const auto c = saddle::transit_campaign(spec, BumpProfile(delta, rho0), cfg.samples.transits, cfg.seed);
      c5_lo = std::min(c5_lo, c.c5);
      c5_hi = std::max(c5_hi, c.c5);
      c5_bad += c.c5_violations;
      witness_bad += c.witness_violations;
      excluded += c.excluded;
      inner_inner += c.counts[static_cast<int>(saddle::TransitClass::inner_to_inner)];
      for (int cl = 0; cl < 3; ++cl) realizable = std::min(realizable, c.counts[cl]);
      for (const auto& t : c.transits)
        if (!t.within_c5 && bad.size() < kMaxWitnesses)
          bad.push_back(point_witness("distortion above C5", t.entry, t.distortion, 50.0, t.time));
      std::ostringstream key;
      key << "delta=" << delta;
      rec.constant("c5[" + key.str() + "]", "annulus transit distortion constant C5", c.c5);
      rec.constant("transit_time_mean[" + key.str() + "]", "annulus transit time T(delta)", c.time_mean);
      tab.rows.push_back({delta, double(c.transits.size()), double(c.excluded), c.c5, c.time_min, c.time_mean,
                          c.time_max, double(c.counts[0]), double(c.counts[1]), double(c.counts[2]),
                          double(c.counts[3])});
      logs.push_back(std::log(1.0 / delta));
      means.push_back(c.time_mean);
    }
    // Slope of T against log(1/δ); zero means the transit time does not grow.
    double slope = 0.0;
    if (logs.size() >= 2) {
      const double n = double(logs.size());
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (std::size_t i = 0; i < logs.size(); ++i) {
        sx += logs[i];
        sy += means[i];
        sxx += logs[i] * logs[i];
        sxy += logs[i] * means[i];
      }
      slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
    rec.constant("transit_time_log_slope", "dT/dlog(1/delta) across the sweep", slope);
    rec.constant("c5_factor", "max/min of C5 across the sweep", c5_hi / c5_lo);
    rec.check("transit.c5_factor", c5_hi / c5_lo, "<", cfg.tol.distortion_factor);
    rec.check("transit.c5_bound", double(c5_bad), "<=", 0.0).witnesses = bad;
    rec.check("transit.shear_witness", double(witness_bad), "<=", 0.0);
    rec.check("transit.inner_to_inner", double(inner_inner), "<=", 0.0);
    rec.check("transit.classes_exercised", double(realizable), ">", 0.0);
    rec.check("transit.excluded", double(excluded), "<=", 0.0, true);
  });
  return rec.finish();
}

// ---------------------------------------------------------------------------

namespace {

// (α+1)·f_α^k·|u_i|^{kα}·u_i^{k−1}, written out independently of the module.
double kl_density_formula(double alpha, const blowup::BlowupPoint& p) {
  const int k = p.k();
  double q = 1.0;
  for (int j = 0; j < k; ++j)
    if (j != p.chart) q += p.u[j] * p.u[j];
  const double ui = p.u[p.chart];
  return (alpha + 1.0) * std::pow(q, 0.5 * alpha * k) * std::pow(std::abs(ui), k * alpha) * std::pow(ui, k - 1);
}

}  // namespace

SuiteResult verify_blowup(const Config& cfg) {
  Recorder rec("blowup");
  const SaddleSpec spec = make_saddle(cfg);
  const double rho0 = resolved_rho0(cfg);
  const int k = spec.k();

  rec.stage("commutation", [&] {
    const BumpProfile prof(cfg.delta, rho0);
    const double radius = std::min(3.0 * cfg.delta, 0.3);
    auto rng = sampling::make_rng(cfg.seed, 0xB10);
    Worst worst;
    std::size_t switched = 0;
    for (std::size_t i = 0; i < cfg.samples.commutation; ++i) {
      Point x;
      do {
        x = sampling::in_ball(rng, k, radius);
      } while (x.norm() < 1e-3 * radius);
      const auto p = blowup::lift(x);
      const double t = sampling::uniform(rng, 0.0, 1.0);
      const auto q = blowup::lifted_slow_flow(spec, prof, p, t);
      switched += q.chart != p.chart;
      worst.offer((blowup::blowdown(q) - saddle::flow_slow(spec, prof, x, t)).norm(), x, t);
    }
    rec.constant("commutation_residual", "max |pi o lifted flow - flow o pi|", worst.value);
    rec.constant("chart_switches", "lifted orbits that changed chart", double(switched));
    worst.witness_if_failed(rec.check("commutation", worst.value, "<", cfg.tol.commutation), "blow-down mismatch");
  });

  rec.stage("densities", [&] {
    const double alpha = resolved_alpha(cfg);
    const blowup::KLStructure kl(k, alpha);
    auto rng = sampling::make_rng(cfg.seed, 0xB11);
    Worst pull, kld, formula;
    for (std::size_t i = 0; i < cfg.samples.densities; ++i) {
      blowup::BlowupPoint p{static_cast<int>(i % std::size_t(k)), sampling::uniform_box(rng, k, 1.0)};
      const Matrix fd = central_jacobian([&](const Point& u) { return blowup::blowdown({p.chart, u}); }, p.u, 1e-6);
      pull.offer(std::abs(fd.determinant() - std::pow(p.u[p.chart], k - 1)), p.u, 0.0, p.chart);
      if (std::abs(p.u[p.chart]) < 0.05) continue;
      const Matrix fk =
          central_jacobian([&](const Point& u) { return blowup::kl_chart_map(kl, {p.chart, u}); }, p.u, 1e-7);
      const double det = fk.determinant();
      kld.offer(std::abs(det - blowup::kl_density(kl, p)), p.u, 0.0, p.chart);
      formula.offer(std::abs(det - kl_density_formula(alpha, p)), p.u, 0.0, p.chart);
    }
    pull.witness_if_failed(rec.check("pullback_density", pull.value, "<", cfg.tol.density), "pull-back density");
    kld.witness_if_failed(rec.check("kl_density", kld.value, "<", cfg.tol.density), "KL density");
    formula.witness_if_failed(rec.check("kl_density_formula", formula.value, "<", cfg.tol.density), "KL formula");
    rec.constant("alpha", "radial exponent alpha of the new smooth structure", alpha);

    if (std::abs(k * alpha + k - 1) < 1e-12) {
      const double m = blowup::kl_density_box_minimum(kl, 11);
      const double bound = std::pow(double(k), -(k - 1) / 2.0) / k;
      rec.constant("kl_density_box_min", "min |KL density| on the chart box", m);
      rec.constant("kl_density_floor", "(1/k) k^(-(k-1)/2)", bound);
      rec.check("kl_density_floor", m, ">=", bound * (1 - 1e-12));
    }
    for (int kk = 2; kk <= 4; ++kk) {
      const double m = blowup::kl_density_box_minimum(blowup::KLStructure::volume_preserving(kk), 11);
      rec.constant("kl_density_box_min[k=" + std::to_string(kk) + "]",
                   "min |KL density| on the chart box for alpha = -(k-1)/k", m);
    }
  });

  rec.stage("kl_rates", [&] {
    const BumpProfile prof(cfg.delta, rho0);
    const auto r = blowup::kl_rate_check(spec, blowup::KLStructure(k, resolved_alpha(cfg)), prof, {1, 2, 4}, 100,
                                         cfg.seed);
    rec.constant("kl_unstable_slope", "new-norm growth exponent on the top unstable axis", r.unstable_axis_slope);
    rec.constant("kl_expected_slope", "rho0 (1 + alpha) max rate", r.expected_slope);
    rec.flag("kl_rate_bounds", r.within_bounds);
    rec.check("kl_slope", std::abs(r.unstable_axis_slope - r.expected_slope), "<",
              1e-8 * std::max(1.0, std::abs(r.expected_slope)));
  });

  rec.stage("lifted_flow", [&] {
    const BumpProfile prof(cfg.delta, rho0);
    const blowup::LiftOptions fixed{1e-3, 1e9};
    const blowup::LiftOptions half{5e-4, 1e9};
    auto rng = sampling::make_rng(cfg.seed, 0xB12);
    Worst jac, rich;
    for (std::size_t i = 0; i < cfg.samples.oracle; ++i) {
      const Point x = cfg.delta * sampling::uniform(rng, 0.5, 2.0) * sampling::unit_vector(rng, k);
      const auto p = blowup::lift(x);
      const auto r = blowup::lifted_variational_flow(spec, prof, p, 1.0);
      const Matrix fd = central_jacobian(
          [&](const Point& u) { return blowup::lifted_slow_flow(spec, prof, {p.chart, u}, 1.0, fixed).u; }, p.u,
          1e-6);
      jac.offer((fd - r.jacobian).norm() / r.jacobian.norm(), p.u, 1.0, p.chart);
      const Point a = blowup::lifted_slow_flow(spec, prof, p, 1.0, fixed).u;
      const Point b = blowup::lifted_slow_flow(spec, prof, p, 1.0, half).u;
      rich.offer(rel(a, b), p.u, 1.0, p.chart);
    }
    jac.witness_if_failed(rec.check("lifted_variational.jacobian_fd", jac.value, "<", cfg.tol.jacobian),
                          "lifted variational Jacobian against central differences");
    rich.witness_if_failed(rec.check("lifted_flow.richardson", rich.value, "<", cfg.tol.richardson),
                           "half-step disagreement");
  });
  return rec.finish();
}

// ---------------------------------------------------------------------------

SuiteResult verify_cones(const Config& cfg) {
  Recorder rec("cones");
  const SaddleSpec spec = make_saddle(cfg);
  const AnosovModel an = make_anosov(cfg);
  const double rho0 = resolved_rho0(cfg);

  auto lemma1 = [&](const SaddleSpec& s, const AnosovModel& a, double r, std::size_t samples) {
    cones::Lemma1Config c;
    c.saddle = s;
    c.anosov = a;
    c.rho0 = r;
    c.delta = cfg.delta;
    c.omega = cfg.omega;
    c.samples = samples;
    c.seed = cfg.seed;
    c.expansion_tol = cfg.tol.expansion;
    return cones::lemma1_campaign(c);
  };

  rec.stage("lemma1", [&] {
    const auto r = lemma1(spec, an, rho0, cfg.samples.lemma1);
    rec.constant("lemma1.mu_meas", "measured unstable expansion e^(min exponent) on the u-cone", r.mu_meas);
    rec.constant("lemma1.min_expansion_exponent", "min (1/t) log |D phi^t v| over u-cone vectors",
                 r.min_expansion_exponent);
    rec.constant("lemma1.kappa_meas", "measured domination factor kappa", r.kappa_meas);
    rec.constant("lemma1.burn_in", "cone burn-in time T_b", r.burn_in);
    rec.constant("lemma1.vectors", "cone vectors tested", double(r.vectors_tested));
    attach(rec.check("lemma1.expansion", r.min_expansion_exponent, ">=", r.expansion_threshold), r.witnesses,
           "expansion");
    attach(rec.check("lemma1.domination", r.kappa_meas, ">", cfg.tol.kappa), r.witnesses, "domination");
    attach(rec.check("lemma1.u_invariance", double(r.u_invariance_violations), "<=", 0.0), r.witnesses,
           "u_cone_forward_invariance");
    attach(rec.check("lemma1.cs_invariance", double(r.cs_invariance_violations), "<=", 0.0), r.witnesses,
           "cs_cone_backward_invariance");
    rec.check("lemma1.burn_in", r.burn_in, "<=", 1.0);
  });

  rec.stage("lemma1_reversed", [&] {
    const auto r = lemma1(spec.reversed(), an.reversed(), rho0, cfg.samples.lemma1_reversed);
    rec.constant("lemma1_reversed.kappa_meas", "domination factor for the reversed flow", r.kappa_meas);
    attach(rec.flag("lemma1_reversed", r.passed()), r.witnesses);
  });

  rec.stage("lemma1_negative", [&] {
    const auto r = lemma1(spec, an, cfg.negative_rho0, cfg.samples.lemma1_negative);
    const double violations = double(r.u_invariance_violations + r.cs_invariance_violations +
                                     r.expansion_violations + r.domination_violations);
    rec.constant("lemma1_negative.rho0", "infeasible rho0 of the negative control", cfg.negative_rho0);
    rec.constant("lemma1_negative.violations", "violations under the infeasible rho0", violations);
    attach(rec.check("lemma1.negative_control", violations, ">", 0.0), r.witnesses);
  });

  rec.stage("lemma3", [&] {
    cones::Lemma3Config c;
    c.saddle = spec;
    c.anosov = an;
    c.rho0 = rho0;
    c.omega = cfg.omega;
    c.samples = cfg.samples.lemma3;
    c.seed = cfg.seed;
    const auto sw = cones::lemma3_sweep(c, cfg.lemma3_deltas);
    Table& tab = rec.table("lemma3_sweep", {"delta", "transits", "excluded", "c5", "c6_u", "c6_cs", "c7_u", "c7_cs",
                                            "time_mean", "inner_to_outer", "outer_to_inner", "outer_to_outer",
                                            "inner_to_inner", "inner_probes"});
    for (const auto& r : sw.per_delta) {
      std::ostringstream key;
      key << "[delta=" << r.delta << "]";
      rec.constant("lemma3.c6" + key.str(), "cone-angle distortion constant C6 across the annulus", r.c6());
      rec.constant("lemma3.c7" + key.str(), "minimal cone-vector stretch C7 across the annulus", r.c7());
      tab.rows.push_back({r.delta, double(r.transits), double(r.excluded), r.c5, r.c6_u, r.c6_cs, r.c7_u, r.c7_cs,
                          r.time_mean, double(r.counts[0]), double(r.counts[1]), double(r.counts[2]),
                          double(r.counts[3]), double(r.inner_probes)});
    }
    rec.check("lemma3.c6_factor", sw.c6_factor, "<", cfg.tol.constant_factor);
    rec.check("lemma3.c7_factor", sw.c7_factor, "<", cfg.tol.constant_factor);
    rec.flag("lemma3.classes_exercised", sw.all_classes_exercised);

    c.slowdown = false;
    const auto ctl = cones::lemma3_campaign(c, cfg.delta);
    rec.constant("lemma3_control.c6", "C6 without slow-down", ctl.c6());
    rec.check("lemma3.control_c6", ctl.c6(), "<=", 1.0 + 1e-9);
  });

  rec.stage("chain", [&] {
    const auto r = cones::ph_inequality_check(spec, an, rho0, cfg.delta, cfg.samples.chain, cfg.seed);
    Table& tab = rec.table("chain", {"region", "samples", "stable_max", "center_min", "center_max", "unstable_min",
                                     "log_lambda", "log_mu"});
    for (std::size_t i = 0; i < r.regions.size(); ++i) {
      const auto& g = r.regions[i];
      rec.constant("chain." + g.name + ".center_max", "max center exponent in region", g.center_max);
      rec.constant("chain." + g.name + ".center_min", "min center exponent in region", g.center_min);
      attach(rec.flag("chain." + g.name, g.passed), g.witnesses);
      tab.rows.push_back({double(i), double(g.samples), g.stable_max, g.center_min, g.center_max, g.unstable_min,
                          g.log_lambda, g.log_mu});
    }
    const auto bad = cones::ph_inequality_check(spec, an, cfg.negative_rho0, cfg.delta, cfg.samples.chain / 4 + 1,
                                                cfg.seed);
    double failed = 0.0;
    std::vector<cones::Witness> ws;
    for (const auto& g : bad.regions)
      if (!g.passed) {
        failed += 1.0;
        ws.insert(ws.end(), g.witnesses.begin(), g.witnesses.end());
      }
    attach(rec.check("chain.negative_control", failed, ">", 0.0), ws);
  });

  rec.stage("propagate", [&] {
    const cones::ProductModel model{spec, BumpProfile(cfg.delta, rho0), an};
    const cones::Layout l = model.layout();
    const int k = spec.k();
    const Matrix id = Matrix::Identity(l.dim(), l.dim());
    auto rng = sampling::make_rng(cfg.seed, 0xC0);
    Worst worst;
    for (std::size_t i = 0; i < cfg.samples.oracle; ++i) {
      const Point x = sampling::unit_vector(rng, k) * (1.5 * cfg.delta);
      const double t = 0.6;
      const auto r = cones::propagate(model, cones::TangentState::euclidean(cones::FlowKind::annulus, x), t, id);
      const Eigen::VectorXd v = sampling::unit_vector(rng, l.dim());
      const double h = 1e-6;
      Eigen::VectorXd fd(l.dim());
      fd.head(k) = (saddle::flow_slow(spec, model.profile, x + h * v.head(k), t) -
                    saddle::flow_slow(spec, model.profile, x - h * v.head(k), t)) /
                   (2 * h);
      fd.tail(an.dim()) = an.cocycle(t) * v.tail(an.dim());
      worst.offer((r.tangent * v - fd).norm() / fd.norm(), x, t);
    }
    worst.witness_if_failed(rec.check("propagate.jacobian_fd", worst.value, "<", cfg.tol.jacobian),
                            "tangent map against central differences");
  });
  return rec.finish();
}

// ---------------------------------------------------------------------------

SuiteResult verify_volume(const Config& cfg) {
  Recorder rec("volume");
  const SaddleSpec spec = make_saddle(cfg);
  const double rho0 = resolved_rho0(cfg);
  const int k = spec.k();

  rec.stage("rho_lemma", [&] {
    const BumpProfile profile(cfg.delta, rho0);
    const auto rho = forms::ScalarField::generic(k, [profile](auto x) { return profile.at(x); });
    const auto x = forms::VectorField::linear_diagonal(spec.rates());
    const auto m = forms::Form::volume(k);
    rec.check("m_invariant", std::abs(spec.trace()), "<", cfg.tol.volume);
    if (std::abs(spec.trace()) >= cfg.tol.volume) return;
    auto rng = sampling::make_rng(cfg.seed, 0x70);
    std::vector<Point> pts;
    std::size_t annulus = 0;
    for (std::size_t i = 0; i < cfg.samples.volume_probes; ++i) {
      pts.push_back(sampling::unit_vector(rng, k) * sampling::uniform(rng, 0.0, 3.0 * cfg.delta));
      const double r = pts.back().norm();
      annulus += r > cfg.delta && r < 2 * cfg.delta;
    }
    const auto rep = forms::verify_rho_volume(rho, x, m, pts, cfg.tol.volume);
    rec.constant("residual", "max |L_{rho X}(m/rho)|", rep.residual);
    rec.constant("control", "max |L_{rho X} m|", rep.control);
    rec.constant("annulus_probes", "probes inside the annulus", double(annulus));
    rec.check("rho_lemma", rep.residual, "<", cfg.tol.volume);
    rec.check("negative_control", rep.control, ">=", cfg.tol.volume_control);
    rec.check("annulus_probes", double(annulus), ">", 0.0);
  });

  rec.stage("remark2", [&] {
    const auto flat = blowup::remark2_density_probe(k, [](const Point&) { return 1.0; });
    const auto linear = blowup::remark2_density_probe(k, [](const Point& x) { return 1.0 + x[0]; });
    rec.constant("remark2.linear_slope", "log-log slope of the density derivative at the exceptional set",
                 linear.slope);
    rec.flag("remark2.constant_density_smooth", flat.bounded);
    rec.flag("remark2.linear_density_not_c1", !linear.bounded);
  });
  return rec.finish();
}

// ---------------------------------------------------------------------------

SuiteResult verify_moser(const Config& cfg) {
  using forms::Form;
  using forms::ScalarField;
  Recorder rec("moser");
  const ScalarField gamma = ScalarField::generic(4, [](auto x) { return 0.1 * (x[0] * x[2] + x[1] * x[3]); });
  const auto x = forms::saddle_generator(4);
  auto rng = sampling::make_rng(cfg.seed, 0x4D);
  auto probes = [&](std::size_t n, double r) {
    std::vector<Point> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(sampling::in_ball(rng, 4, r));
    return out;
  };

  rec.stage("identities", [&] {
    const auto pts = probes(cfg.samples.volume_probes, 0.5);
    const Form eta0 = forms::moser_eta0(4);
    const double prim = forms::max_abs(forms::d(eta0) - Form::volume(4), pts);
    const double inv = forms::max_abs(forms::lie(x, eta0), pts);
    rec.check("eta0_primitive", prim, "<", cfg.tol.moser_identity);
    rec.check("eta0_invariant", inv, "<", cfg.tol.moser_identity);
    const ScalarField xb = forms::directional(x, forms::moser_beta(gamma));
    Worst worst;
    for (const auto& p : pts) worst.offer(std::abs(xb(p)), p);
    rec.constant("beta_invariance", "max |X beta|", worst.value);
    worst.witness_if_failed(rec.check("beta_invariance", worst.value, "<", cfg.tol.moser_beta), "X beta");
  });

  rec.stage("transport", [&] {
    const forms::MoserFlow h(gamma);
    const ScalarField alpha = h.alpha();
    Worst fwd, inv, jac, rich;
    forms::MoserOptions fine;
    fine.steps = 2 * h.options().steps;
    const forms::MoserFlow h2(gamma, fine);
    for (const auto& p : probes(cfg.samples.moser_probes, 0.4)) {
      const Point q = h.forward(p);
      const Matrix fd = central_jacobian([&](const Point& z) { return h.forward(z); }, p, 1e-5);
      fwd.offer(std::abs(alpha(q) * fd.determinant() - 1.0), p);
      inv.offer(std::abs(h.inverse_jacobian(q).determinant() - alpha(q)), q);
      const Matrix ad = h.forward_jacobian(p);
      jac.offer((ad - fd).norm() / ad.norm(), p);
      rich.offer(rel(q, h2.forward(p)), p);
    }
    rec.constant("transport_forward", "max |alpha(h(x)) det Dh(x) - 1|", fwd.value);
    rec.constant("transport_inverse", "max |det Dh^-1(y) - alpha(y)|", inv.value);
    fwd.witness_if_failed(rec.check("transport", fwd.value, "<", cfg.tol.moser_transport), "volume transport");
    inv.witness_if_failed(rec.check("transport_inverse", inv.value, "<", cfg.tol.moser_transport), "volume transport");
    jac.witness_if_failed(rec.check("flow.jacobian_fd", jac.value, "<", cfg.tol.jacobian), "Moser Jacobian");
    rich.witness_if_failed(rec.check("flow.richardson", rich.value, "<", cfg.tol.richardson), "half-step");
  });

  rec.stage("commutation", [&] {
    const forms::MoserFlow h(gamma);
    Worst worst;
    for (const auto& p : probes(cfg.samples.moser_commutation, 0.15))
      for (int i = 0; i <= 20; ++i) {
        const double t = -1.0 + 0.1 * i;
        worst.offer((h.forward(forms::saddle_flow(p, t)) - forms::saddle_flow(h.forward(p), t)).norm(), p, t);
      }
    rec.constant("commutation", "max |h o a_t - a_t o h| on t in [-1, 1]", worst.value);
    worst.witness_if_failed(rec.check("commutation", worst.value, "<", cfg.tol.moser_commutation), "h a_t != a_t h");
  });

  rec.stage("bracket", [&] {
    const auto pts = probes(300, 0.5);
    const auto ok = forms::equivariance_audit(forms::MoserFlow(gamma), x, pts);
    rec.constant("bracket", "max |[X, Y_s]|", ok.max());
    rec.check("bracket", ok.max(), "<", cfg.tol.moser_bracket);
    const auto bad = forms::equivariance_audit(forms::MoserFlow(ScalarField::coordinate(4, 0)), x, pts);
    rec.check("bracket.negative_control", bad.max(), ">", 1e-3);
  });
  return rec.finish();
}

// ---------------------------------------------------------------------------

SuiteResult verify_homogeneous(const Config& cfg) {
  Recorder rec("homogeneous");
  for (int n : cfg.n) {
    const std::string p = "n" + std::to_string(n) + ".";
    rec.stage(p.substr(0, p.size() - 1), [&] {
      const auto r = homogeneous::homogeneous_suite(n, cfg.samples.homogeneous, cfg.seed);
      rec.check(p + "algebra", r.algebra, "<", cfg.tol.group);
      rec.check(p + "group", r.group, "<", cfg.tol.group);
      rec.check(p + "exp_oracle", r.exp_oracle, "<", 1e-12);
      rec.check(p + "block_roundtrip", r.block_roundtrip, "<", 1e-12);
      rec.check(p + "conj_identity", r.conj_identity, "<", cfg.tol.identity);
      rec.check(p + "product_form", r.product_form, "<", cfg.tol.identity);
      rec.check(p + "horocycle_scaling", r.horocycle_scaling, "<", cfg.tol.group);
      rec.check(p + "group_laws", r.group_laws, "<", cfg.tol.group);
      rec.check(p + "transverse_rates", r.transverse_rates, "<", cfg.tol.group);
      rec.check(p + "conjugation", r.conjugation.max(), "<", cfg.tol.conjugation);
      rec.check(p + "diffeo_rank", double(r.diffeo.rank), ">=", double(r.diffeo.expected));
      rec.flag(p + "diffeo_summands", r.diffeo.summands_independent);
      rec.flag(p + "w_double_cover", r.w_cover);
      rec.flag(p + "w_intersection_trivial", r.intersection_trivial);
      rec.flag(p + "coset_equality", r.coset_checks);
      if (!r.diffeo.null_vector.empty()) {
        Witness w;
        w.description = "null vector of the parametrization derivative";
        w.point = r.diffeo.null_vector;
        rec.check(p + "diffeo_null_vector", 1.0, "<", 1.0).witnesses.push_back(w);
      }
      rec.constant(p + "diffeo_rank", "rank of w + T Sigma + su(1,1) -> su(n,1)", double(r.diffeo.rank));
      rec.constant(p + "dim_su", "n^2 + 2n", double(r.diffeo.expected));
      rec.constant(p + "diffeo_min_singular", "smallest singular value of the parametrization derivative",
                   r.diffeo.min_singular);
      rec.constant(p + "product_form", "max |d_t sigma u - sigma(e^-t v1, e^t v2) d_t u|", r.product_form);
      rec.constant(p + "conj_identity", "max |d_t sigma d_-t - sigma(e^-t v1, e^t v2)|", r.conj_identity);
    });
  }
  return rec.finish();
}

SuiteResult run(const std::string& suite, const Config& cfg) {
  if (suite == "verify-saddle") return verify_saddle(cfg);
  if (suite == "verify-blowup") return verify_blowup(cfg);
  if (suite == "verify-cones") return verify_cones(cfg);
  if (suite == "verify-volume") return verify_volume(cfg);
  if (suite == "verify-moser") return verify_moser(cfg);
  if (suite == "verify-homogeneous") return verify_homogeneous(cfg);
  throw DomainError("unknown suite: " + suite);
}

}  // namespace phsurgery::suites
