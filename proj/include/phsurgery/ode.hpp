#pragma once

// Fixed-step classical Runge-Kutta integration with sign-change event
// location. The right-hand side is any callable `Vector f(double t, const
// Vector& y)`.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

namespace phsurgery::ode {

using Vector = Eigen::VectorXd;
using Rhs = std::function<Vector(double, const Vector&)>;

inline Vector rk4_step(const Rhs& f, double t, const Vector& y, double h) {
  const Vector k1 = f(t, y);
  const Vector k2 = f(t + 0.5 * h, y + (0.5 * h) * k1);
  const Vector k3 = f(t + 0.5 * h, y + (0.5 * h) * k2);
  const Vector k4 = f(t + h, y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Guard evaluated after every accepted step; returning false stops the
/// integration and the step time is reported to the caller.
using Guard = std::function<bool(double, const Vector&)>;

struct Trajectory {
  Vector y;
  double t = 0.0;
  std::size_t steps = 0;
  bool stopped = false;  ///< guard tripped at time t
};

/// Integrates from t0 to t1 (either direction) with steps of magnitude at
/// most |h|; the last step is shortened to land on t1 exactly.
inline Trajectory integrate(const Rhs& f, Vector y, double t0, double t1, double h,
                            const Guard& guard = {}) {
  Trajectory out;
  const double span = t1 - t0;
  if (span == 0.0) {
    out.y = std::move(y);
    out.t = t0;
    return out;
  }
  const auto n = static_cast<std::size_t>(std::ceil(std::abs(span) / std::abs(h) - 1e-12));
  const double step = span / static_cast<double>(n);
  double t = t0;
  for (std::size_t i = 0; i < n; ++i) {
    y = rk4_step(f, t, y, step);
    t = (i + 1 == n) ? t1 : t0 + static_cast<double>(i + 1) * step;
    ++out.steps;
    if (guard && !guard(t, y)) {
      out.stopped = true;
      break;
    }
  }
  out.y = std::move(y);
  out.t = t;
  return out;
}

struct Event {
  double t = 0.0;
  Vector y;
  int which = -1;  ///< index of the event function that changed sign
};

/// Event functions g_j(y); an event fires when some g_j changes sign from
/// `initial sign` within a step. The crossing is refined by bisection on the
/// sub-step length until the bracket is shorter than `t_tol`.
struct EventSpec {
  std::vector<std::function<double(const Vector&)>> g;
  /// Optional reference signs; a zero or missing entry means "sign of g at
  /// the initial state". Forcing the sign lets an orbit start on a level set.
  std::vector<int> initial_sign;
  double t_tol = 1e-10;
};

struct EventResult {
  std::optional<Event> event;
  Vector y;      ///< state at the stopping time
  double t = 0;  ///< stopping time (event time, guard time or t_max)
  std::size_t steps = 0;
  bool stopped = false;  ///< guard tripped
};

inline EventResult integrate_to_event(const Rhs& f, Vector y, double t0, double t_max, double h,
                                      const EventSpec& events, const Guard& guard = {}) {
  EventResult out;
  auto sign_of = [](double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); };
  std::vector<int> s0(events.g.size());
  for (std::size_t j = 0; j < events.g.size(); ++j) {
    const int forced = j < events.initial_sign.size() ? events.initial_sign[j] : 0;
    s0[j] = forced != 0 ? forced : sign_of(events.g[j](y));
  }

  double t = t0;
  while (t < t_max) {
    const double step = std::min(h, t_max - t);
    Vector next = rk4_step(f, t, y, step);
    ++out.steps;
    int hit = -1;
    for (std::size_t j = 0; j < events.g.size(); ++j) {
      const int sj = sign_of(events.g[j](next));
      if (s0[j] != 0 && sj != s0[j]) {
        hit = static_cast<int>(j);
        break;
      }
    }
    if (hit >= 0) {
      // Bisection on the sub-step length from the accepted state y at t.
      double lo = 0.0;
      double hi = step;
      Vector y_hi = next;
      while (hi - lo > events.t_tol) {
        const double mid = 0.5 * (lo + hi);
        Vector y_mid = rk4_step(f, t, y, mid);
        if (sign_of(events.g[hit](y_mid)) == s0[hit]) {
          lo = mid;
        } else {
          hi = mid;
          y_hi = std::move(y_mid);
        }
      }
      out.event = Event{t + hi, y_hi, hit};
      out.y = std::move(y_hi);
      out.t = t + hi;
      return out;
    }
    y = std::move(next);
    t += step;
    if (guard && !guard(t, y)) {
      out.stopped = true;
      break;
    }
  }
  out.y = std::move(y);
  out.t = t;
  return out;
}

}  // namespace phsurgery::ode
