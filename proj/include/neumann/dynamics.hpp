#pragma once

// Trajectories on T*S^n, conservation monitoring, relative equilibria of the
// reduced system and return-time measurement on a Poincare section.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "neumann/integrator.hpp"
#include "neumann/model.hpp"
#include "neumann/poisson.hpp"
#include "neumann/reduction.hpp"

namespace neumann {

/// Names of the monitored quantities, in the order produced by conserved_quantities.
inline std::vector<std::string> conserved_names(const SpectrumSpec& spec) {
  std::vector<std::string> names{"H", "C1", "C2"};
  for (int s = 0; s <= spec.ell(); ++s) names.push_back("F_" + std::to_string(s));
  for (int s = 0; s <= spec.ell(); ++s)
    for (int i = spec.block_begin(s); i < spec.block_end(s); ++i)
      for (int k = i + 1; k < spec.block_end(s); ++k)
        names.push_back("L_" + std::to_string(i) + "_" + std::to_string(k));
  for (int s = 0; s <= spec.ell(); ++s)
    if (spec.m(s) >= 2) names.push_back("W_" + std::to_string(s));
  return names;
}

inline std::vector<double> conserved_quantities(const SpectrumSpec& spec, const PhasePoint& p) {
  const auto [c1, c2] = constraint_values(p);
  std::vector<double> q{hamiltonian(spec, p), c1, c2};
  for (int s = 0; s <= spec.ell(); ++s) q.push_back(integral_f(spec, p, s));
  for (int s = 0; s <= spec.ell(); ++s)
    for (int i = spec.block_begin(s); i < spec.block_end(s); ++i)
      for (int k = i + 1; k < spec.block_end(s); ++k) q.push_back(angular_momentum(p, i, k));
  for (int s = 0; s <= spec.ell(); ++s)
    if (spec.m(s) >= 2) q.push_back(block_casimir(spec, p, s));
  return q;
}

struct Trajectory {
  std::vector<double> t;
  std::vector<PhasePoint> samples;
  std::vector<std::vector<double>> invariants;  // conserved_quantities at each sample

  std::size_t size() const { return t.size(); }
  const PhasePoint& back() const { return samples.back(); }
};

/// Integrates the flow on T*S^n with per-step projection back onto the constraint set.
inline Trajectory integrate(const SpectrumSpec& spec, const PhasePoint& p0, double t_end, const StepControl& ctl = {},
                            ManifoldTolerance tol = {}) {
  check_dimension(spec, p0);
  require_on_manifold(p0, tol);
  auto field = [&spec](double, const Vector& z) {
    const PhasePoint p = PhasePoint::unpack(z);
    const PhaseVelocity v = vector_field_unchecked(spec, p);
    Vector dz(z.size());
    dz << v.dx, v.dy;
    return dz;
  };
  auto project = [](const Vector& z) { return project_to_manifold(PhasePoint::unpack(z)).packed(); };
  Trajectory traj;
  integrate_projected(field, project, p0.packed(), 0.0, t_end, ctl, [&](double t, const Vector& z) {
    PhasePoint p = PhasePoint::unpack(z);
    traj.t.push_back(t);
    traj.invariants.push_back(conserved_quantities(spec, p));
    traj.samples.push_back(std::move(p));
    return true;
  });
  return traj;
}

struct DriftReport {
  std::vector<std::string> names;
  std::vector<double> max_abs;  // max_k |Q(t_k) - Q(0)|
  std::vector<double> max_rel;  // the same divided by max(1, |Q(0)|)

  double worst_relative() const {
    return max_rel.empty() ? 0.0 : *std::max_element(max_rel.begin(), max_rel.end());
  }
};

inline DriftReport drift_report(const SpectrumSpec& spec, const Trajectory& traj) {
  if (traj.size() == 0) throw PreconditionError("drift report needs a nonempty trajectory");
  DriftReport r;
  r.names = conserved_names(spec);
  const auto& q0 = traj.invariants.front();
  r.max_abs.assign(q0.size(), 0.0);
  for (const auto& q : traj.invariants)
    for (std::size_t k = 0; k < q.size(); ++k) r.max_abs[k] = std::max(r.max_abs[k], std::abs(q[k] - q0[k]));
  r.max_rel.resize(q0.size());
  for (std::size_t k = 0; k < q0.size(); ++k) r.max_rel[k] = r.max_abs[k] / std::max(1.0, std::abs(q0[k]));
  return r;
}

/// Sample of the reduced (Rosochatius) flow.
struct ReducedTrajectory {
  Vector w;
  std::vector<double> t;
  std::vector<Vector> xi;
  std::vector<Vector> eta;
  std::vector<double> energy;
};

namespace detail {

inline auto reduced_field(const SpectrumSpec& spec, const Vector& w) {
  return [&spec, w](double, const Vector& z) {
    const Eigen::Index d = z.size() / 2;
    const Vector xi = z.head(d);
    const Vector eta = z.tail(d);
    for (Eigen::Index s = 0; s < d; ++s)
      if (w[s] != 0.0 && xi[s] == 0.0) throw NumericalError("reduced flow reached xi = 0 with w != 0");
    const PhaseVelocity v = sphere_vector_field(xi, eta, amended_potential_gradient(spec, w, xi));
    Vector dz(z.size());
    dz << v.dx, v.dy;
    return dz;
  };
}

inline Vector project_reduced_packed(const Vector& z) {
  const Eigen::Index d = z.size() / 2;
  Vector xi = z.head(d);
  Vector eta = z.tail(d);
  project_reduced(xi, eta);
  Vector out(z.size());
  out << xi, eta;
  return out;
}

} // namespace detail

/// Integrates the reduced flow. Negative w is admitted; an approach to a
/// singular wall xi_s = 0 (|xi_s| < blowup_radius with w_s != 0, or a
/// non-finite state) is reported as a NumericalError naming the time.
inline ReducedTrajectory integrate_reduced(const SpectrumSpec& spec, const Vector& w, const Vector& xi0,
                                           const Vector& eta0, double t_end, const StepControl& ctl = {},
                                           double blowup_radius = 1e-6) {
  detail::check_reduced_sizes(spec, w, xi0, eta0);
  detail::check_regular_chart(w, xi0);
  Vector z0(2 * xi0.size());
  z0 << xi0, eta0;
  ReducedTrajectory out;
  out.w = w;
  const Eigen::Index d = xi0.size();
  auto wall_distance = [&](const Vector& xi) {
    double m = std::numeric_limits<double>::infinity();
    for (Eigen::Index s = 0; s < d; ++s)
      if (w[s] != 0.0) m = std::min(m, std::abs(xi[s]));
    return m;
  };
  auto blowup = [](Eigen::Index s, double t) {
    std::ostringstream os;
    os.precision(17);
    os << "reduced solution reaches the singular wall xi_" << s << " = 0 near t = " << t << " (finite-time blow-up)";
    return NumericalError(os.str());
  };
  try {
    integrate_projected(detail::reduced_field(spec, w), detail::project_reduced_packed, z0, 0.0, t_end, ctl,
                        [&](double t, const Vector& z) {
                          const Vector xi = z.head(d);
                          for (Eigen::Index s = 0; s < d; ++s)
                            if (w[s] != 0.0 && std::abs(xi[s]) < blowup_radius) throw blowup(s, t);
                          out.t.push_back(t);
                          out.xi.push_back(xi);
                          out.eta.push_back(z.tail(d));
                          out.energy.push_back(reduced_hamiltonian(spec, w, out.xi.back(), out.eta.back()));
                          return true;
                        });
  } catch (const NumericalError& e) {
    // The step control usually gives up before the wall itself is reached.
    if (out.xi.empty() || std::string(e.what()).find("blow-up") != std::string::npos) throw;
    const Vector& last = out.xi.back();
    if (wall_distance(last) < 1e-2) {
      Eigen::Index s = 0;
      for (Eigen::Index k = 0; k < d; ++k)
        if (w[k] != 0.0 && std::abs(last[k]) == wall_distance(last)) s = k;
      throw blowup(s, out.t.back());
    }
    throw;
  }
  return out;
}

/// Critical point of the amended potential on the stratum xi_s = 0 for m_s = 1.
struct RelativeEquilibrium {
  Vector xi;
  double beta = 0.0;
  Vector omega;  // sqrt(b_s - beta); 0 on inactive blocks
  Vector j;
  double h = 0.0;       // sum j_s (omega_s + b_s / omega_s), twice the energy
  double energy = 0.0;  // value of the Hamiltonian, h / 2
  std::vector<int> active;  // blocks with j_s > 0

  /// The equilibrium as a point of the reduced phase space.
  RegularCoordinates regular() const {
    RegularCoordinates rc{xi, Vector::Zero(xi.size()), j.array().square().matrix()};
    return rc;
  }
};

namespace detail {

inline void check_equilibrium_momenta(const SpectrumSpec& spec, const Vector& j) {
  if (j.size() != spec.block_count()) throw ConfigError("relative_equilibrium: need one momentum per block");
  bool any = false;
  for (int s = 0; s <= spec.ell(); ++s) {
    if (!std::isfinite(j[s]) || j[s] < 0.0) throw ConfigError("relative_equilibrium: momenta must be finite and >= 0");
    if (spec.m(s) == 1 && j[s] != 0.0) {
      std::ostringstream os;
      os << "relative_equilibrium: block " << s << " has m = 1 and carries no momentum (j must be 0)";
      throw PreconditionError(os.str());
    }
    if (spec.m(s) >= 2 && !(j[s] > 0.0)) {
      std::ostringstream os;
      os << "relative_equilibrium: block " << s << " has m >= 2 and needs j > 0 (regular range)";
      throw PreconditionError(os.str());
    }
    any = any || j[s] > 0.0;
  }
  if (!any) throw PreconditionError("relative_equilibrium: all momenta vanish");
}

} // namespace detail

/// Solves sum_s j_s / sqrt(b_s - beta) = 1 for beta < min{b_s : j_s > 0}.
inline RelativeEquilibrium relative_equilibrium(const SpectrumSpec& spec, const Vector& j) {
  detail::check_equilibrium_momenta(spec, j);
  RelativeEquilibrium re;
  re.j = j;
  for (int s = 0; s <= spec.ell(); ++s)
    if (j[s] > 0.0) re.active.push_back(s);
  const double b_low = spec.b(re.active.front());
  const double jsum = j.sum();
  auto excess = [&](double beta) {
    double v = -1.0;
    for (int s : re.active) v += j[s] / std::sqrt(spec.b(s) - beta);
    return v;
  };

  double hi = b_low - 1e-14 * (1.0 + std::abs(b_low));
  double k = 1.0;
  double lo = b_low - jsum * jsum * k;
  for (int it = 0; excess(lo) > 0.0; ++it) {
    if (it > 200) throw NumericalError("relative_equilibrium: could not bracket the multiplier");
    k *= 4.0;
    lo = b_low - jsum * jsum * k;
  }
  if (excess(hi) < 0.0) throw NumericalError("relative_equilibrium: momenta too small to bracket the multiplier");
  for (int it = 0; it < 2000 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (excess(mid) > 0.0 ? hi : lo) = mid;
  }
  re.beta = 0.5 * (lo + hi);

  const int nb = spec.block_count();
  re.xi = Vector::Zero(nb);
  re.omega = Vector::Zero(nb);
  re.h = 0.0;
  for (int s : re.active) {
    const double om = std::sqrt(spec.b(s) - re.beta);
    re.omega[s] = om;
    re.xi[s] = std::sqrt(j[s] / om);
    re.h += j[s] * (om + spec.b(s) / om);
  }
  // Renormalise the last rounding of the constraint.
  re.xi /= re.xi.norm();
  re.energy = 0.5 * re.h;
  return re;
}

/// Gradient 2 omega and Hessian 2 / (omega_s omega_t sum_k j_k / omega_k^3) of h(j).
struct CriticalEnergyDerivatives {
  Vector gradient;
  Matrix hessian;
};

inline CriticalEnergyDerivatives critical_energy_hessian(const SpectrumSpec& spec, const Vector& j) {
  const RelativeEquilibrium re = relative_equilibrium(spec, j);
  const int nb = spec.block_count();
  CriticalEnergyDerivatives out{Vector::Zero(nb), Matrix::Zero(nb, nb)};
  double q = 0.0;
  for (int s : re.active) q += j[s] / std::pow(re.omega[s], 3);
  for (int s : re.active) {
    out.gradient[s] = 2.0 * re.omega[s];
    for (int t : re.active) out.hessian(s, t) = 2.0 / (re.omega[s] * re.omega[t] * q);
  }
  return out;
}

/// Upward crossings of a scalar section function g(z) = 0 along a flow.
struct SectionCrossing {
  double t;
  Vector z;
};

/// Integrates with fixed RK4 steps of size dt and locates upward zero
/// crossings of g by bisection on the length of a single RK4 step from the
/// last grid point, to `time_tol` in time.
template <class Field, class Project, class Section>
std::vector<SectionCrossing> find_crossings(const Field& f, const Project& project, const Section& g, Vector z,
                                            double dt, double t_max, int count, double time_tol = 1e-12) {
  std::vector<SectionCrossing> out;
  double t = 0.0;
  double g0 = g(z);
  const long steps = static_cast<long>(std::ceil(t_max / dt));
  for (long k = 0; k < steps && static_cast<int>(out.size()) < count; ++k) {
    Vector next = project(rk4_step(f, t, z, dt));
    if (!next.allFinite()) throw NumericalError("section search produced a non-finite state");
    const double g1 = g(next);
    if (g0 < 0.0 && g1 >= 0.0) {
      double lo = 0.0;
      double hi = dt;
      while (hi - lo > time_tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (g(project(rk4_step(f, t, z, mid))) < 0.0 ? lo : hi) = mid;
      }
      const double tau = 0.5 * (lo + hi);
      out.push_back({t + tau, project(rk4_step(f, t, z, tau))});
    }
    z = std::move(next);
    g0 = g1;
    t += dt;
  }
  return out;
}

/// Period of the reduced oscillation, measured as the mean return time to
/// the section xi_k = level (upward crossings) over `returns` periods.
struct PeriodMeasurement {
  double period;
  std::vector<double> crossing_times;
};

inline PeriodMeasurement measure_period(const SpectrumSpec& spec, const Vector& w, const Vector& xi0, const Vector& eta0,
                                        int component, double level, int returns = 1, double dt = 1e-3,
                                        double t_max = 1e4) {
  detail::check_reduced_sizes(spec, w, xi0, eta0);
  detail::check_regular_chart(w, xi0);
  if (component < 0 || component > spec.ell()) throw ConfigError("measure_period: section component out of range");
  if (returns < 1) throw ConfigError("measure_period: need at least one return");
  Vector z0(2 * xi0.size());
  z0 << xi0, eta0;
  auto g = [component, level](const Vector& z) { return z[component] - level; };
  const auto cr = find_crossings(detail::reduced_field(spec, w), detail::project_reduced_packed, g, z0, dt, t_max,
                                 returns + 1);
  if (static_cast<int>(cr.size()) < returns + 1) {
    std::ostringstream os;
    os << "measure_period: only " << cr.size() << " section crossings before t = " << t_max;
    throw NumericalError(os.str());
  }
  PeriodMeasurement pm;
  for (const auto& c : cr) pm.crossing_times.push_back(c.t);
  pm.period = (cr.back().t - cr.front().t) / returns;
  return pm;
}

} // namespace neumann
