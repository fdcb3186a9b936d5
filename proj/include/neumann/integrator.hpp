#pragma once

// Classical fourth-order Runge-Kutta with a projection hook after every step.
// Adaptive mode estimates the local error by step doubling.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "neumann/error.hpp"
#include "neumann/model.hpp"

namespace neumann {

struct StepControl {
  double dt = 1e-3;      // fixed step, or the largest step in adaptive mode
  double rtol = 1e-10;   // local error per unit time, relative to max(1, |z|)
  bool adaptive = true;
  double dt_min = 1e-12;
  int record_every = 1;  // keep every k-th accepted step (the final state is always kept)
};

template <class Field>
Vector rk4_step(const Field& f, double t, const Vector& z, double h) {
  const Vector k1 = f(t, z);
  const Vector k2 = f(t + 0.5 * h, z + 0.5 * h * k1);
  const Vector k3 = f(t + 0.5 * h, z + 0.5 * h * k2);
  const Vector k4 = f(t + h, z + h * k3);
  return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Integrates z' = f(t, z) from t0 to t_end. After each accepted step
/// `project` maps the state back onto the constraint set, and
/// `observe(t, z)` is called for recorded samples. `observe` may return
/// false to stop early. Returns the final time reached.
template <class Field, class Project, class Observe>
double integrate_projected(const Field& f, const Project& project, Vector z, double t0, double t_end,
                           const StepControl& ctl, Observe&& observe) {
  if (!(ctl.dt > 0.0)) throw ConfigError("step control: dt must be positive");
  if (ctl.record_every < 1) throw ConfigError("step control: record_every must be >= 1");
  double t = t0;
  if (!observe(t, z)) return t;
  if (!(t_end > t0)) return t;

  if (!ctl.adaptive) {
    // Uniform grid t_k = t0 + k h with h <= dt.
    const long n = std::max(1L, static_cast<long>(std::ceil((t_end - t0) / ctl.dt - 1e-9)));
    const double h = (t_end - t0) / static_cast<double>(n);
    for (long k = 0; k < n; ++k) {
      const double tk = t0 + static_cast<double>(k) * h;
      Vector next = rk4_step(f, tk, z, h);
      if (!next.allFinite()) {
        std::ostringstream os;
        os << "integration produced a non-finite state at t = " << tk;
        throw NumericalError(os.str());
      }
      z = project(next);
      t = (k + 1 == n) ? t_end : t0 + static_cast<double>(k + 1) * h;
      if (k + 1 == n || (k + 1) % ctl.record_every == 0) {
        if (!observe(t, z)) return t;
      }
    }
    return t;
  }

  double h = ctl.dt;
  long step = 0;
  while (t < t_end) {
    // Stretch the final step slightly rather than leave a sliver behind.
    const bool last = t + 1.001 * h >= t_end;
    double step_h = last ? t_end - t : h;
    Vector next;
    for (;;) {
      const Vector full = rk4_step(f, t, z, step_h);
      const Vector half = rk4_step(f, t, z, 0.5 * step_h);
      const Vector two = rk4_step(f, t + 0.5 * step_h, half, 0.5 * step_h);
      const double err = (two - full).lpNorm<Eigen::Infinity>() / 15.0;
      const double scale = std::max(1.0, z.lpNorm<Eigen::Infinity>());
      // Never ask for less than the rounding noise of a single step.
      const double tol = std::max(ctl.rtol * step_h, 64.0 * std::numeric_limits<double>::epsilon()) * scale;
      if (std::isfinite(err) && err <= tol) {
        next = two;
        const double grow = err > 0.0 ? 0.9 * std::pow(tol / err, 0.25) : 2.0;
        h = std::min(ctl.dt, step_h * std::clamp(grow, 0.2, 2.0));
        h = std::max(h, ctl.dt_min);
        break;
      }
      const double shrink = std::isfinite(err) && err > 0.0 ? 0.9 * std::pow(tol / err, 0.25) : 0.2;
      step_h *= std::clamp(shrink, 0.1, 0.5);
      if (step_h < ctl.dt_min) {
        std::ostringstream os;
        os << "step size underflow at t = " << t << " (dt < " << ctl.dt_min << ")";
        throw NumericalError(os.str());
      }
    }
    if (!next.allFinite()) {
      std::ostringstream os;
      os << "integration produced a non-finite state at t = " << t;
      throw NumericalError(os.str());
    }
    const bool reached = last && step_h == t_end - t;
    z = project(next);
    t = reached ? t_end : t + step_h;
    ++step;
    if (t >= t_end || step % ctl.record_every == 0) {
      if (!observe(t, z)) return t;
    }
  }
  return t;
}

} // namespace neumann
