#pragma once

// Separation of variables for the Rosochatius system on T*S^l.
//
// Elliptic-spherical coordinates u_1 < ... < u_l are the roots of
// f(z) = sum xi_s^2 / (z - b_s), interlaced with the eigenvalues. In them the
// motion lies on the hyperelliptic curve
//   zeta^2 = R(z) = -Q(rho; z) A(z) + Qt(z),
// with A = prod (z - b_s), Q = z^l + 2 rho_1 z^(l-1) + ... + 2 rho_l and
// Qt(z) = -sum_s w_s A'(b_s) A(z) / (z - b_s), so that R(b_s) = -w_s A'(b_s)^2.

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "neumann/error.hpp"
#include "neumann/model.hpp"
#include "neumann/polynomial.hpp"
#include "neumann/reduction.hpp"

namespace neumann {

/// A(z) = prod_s (z - b_s).
inline Polynomial eigenvalue_polynomial(const SpectrumSpec& spec) { return Polynomial::from_roots(spec.eigenvalues()); }

/// A'(b_s) = prod_{t != s} (b_s - b_t).
inline double eigenvalue_derivative(const SpectrumSpec& spec, int s) {
  double d = 1.0;
  for (int t = 0; t <= spec.ell(); ++t)
    if (t != s) d *= spec.b(s) - spec.b(t);
  return d;
}

/// The Casimir polynomial Qt(z) = -sum_s w_s A'(b_s) prod_{t != s} (z - b_t), of degree <= l.
inline Polynomial casimir_polynomial(const SpectrumSpec& spec, const Vector& w) {
  detail::require(w.size() == spec.block_count(), "w must have one entry per eigenvalue block");
  Polynomial qt = Polynomial::constant(0.0);
  for (int s = 0; s <= spec.ell(); ++s) {
    if (w[s] == 0.0) continue;
    std::vector<double> others;
    for (int t = 0; t <= spec.ell(); ++t)
      if (t != s) others.push_back(spec.b(t));
    qt = qt + (-w[s] * eigenvalue_derivative(spec, s)) * Polynomial::from_roots(others);
  }
  return qt;
}

/// Q(rho; z) = z^l + 2 rho_1 z^(l-1) + ... + 2 rho_l.
inline Polynomial constants_polynomial(const SpectrumSpec& spec, const Vector& rho) {
  const int l = spec.ell();
  detail::require(rho.size() == l, "rho must have l entries");
  std::vector<double> c(static_cast<std::size_t>(l + 1));
  c[static_cast<std::size_t>(l)] = 1.0;
  for (int k = 1; k <= l; ++k) c[static_cast<std::size_t>(l - k)] = 2.0 * rho[k - 1];
  return Polynomial(std::move(c));
}

/// rho_1 is the energy shifted by half the eigenvalue sum.
inline double energy_from_constants(const SpectrumSpec& spec, const Vector& rho) {
  return rho[0] + 0.5 * spec.eigenvalue_sum();
}

inline double first_constant_from_energy(const SpectrumSpec& spec, double energy) {
  return energy - 0.5 * spec.eigenvalue_sum();
}

struct HyperellipticCurve {
  std::vector<double> b;
  Vector w;
  Vector rho;
  Polynomial a;
  Polynomial q;
  Polynomial qt;
  Polynomial r;
  std::vector<double> real_roots;  // sorted

  int genus() const { return static_cast<int>(b.size()) - 1; }
  double operator()(double z) const { return r.evaluate_compensated(z); }
};

inline HyperellipticCurve build_polynomials(const SpectrumSpec& spec, const Vector& w, const Vector& rho) {
  detail::require(w.size() == spec.block_count(), "w must have one entry per eigenvalue block");
  for (int s = 0; s <= spec.ell(); ++s) {
    if (!(w[s] >= 0.0)) throw PreconditionError("Casimir values must be nonnegative");
    if (spec.m(s) == 1 && w[s] != 0.0) throw PreconditionError("a block with m = 1 carries no Casimir; w must be 0");
  }
  HyperellipticCurve c;
  c.b = spec.eigenvalues();
  c.w = w;
  c.rho = rho;
  c.a = eigenvalue_polynomial(spec);
  c.q = constants_polynomial(spec, rho);
  c.qt = casimir_polynomial(spec, w);
  c.r = c.qt - c.q * c.a;
  c.real_roots = neumann::real_roots(c.r);
  return c;
}

/// Point (u, p) of the separated chart, with u_i in [b_{i-1}, b_i].
struct SeparatedState {
  Vector u;
  Vector p;
  std::vector<std::string> warnings;

  bool near_singular_chart() const { return !warnings.empty(); }
};

namespace detail {

inline double chart_scale(const SpectrumSpec& spec) {
  return 1.0 + std::max(std::abs(spec.b(0)), std::abs(spec.b(spec.ell())));
}

inline void check_interlacing(const SpectrumSpec& spec, const Vector& u) {
  if (u.size() != spec.ell()) throw ConfigError("u must have l entries");
  for (int i = 1; i <= spec.ell(); ++i) {
    const double v = u[i - 1];
    if (!(v >= spec.b(i - 1) && v <= spec.b(i))) {
      std::ostringstream os;
      os.precision(17);
      os << "u_" << i << " = " << v << " is outside [b_" << i - 1 << ", b_" << i << "]";
      throw PreconditionError(os.str());
    }
  }
}

inline void check_open_chart(const SpectrumSpec& spec, const Vector& u) {
  check_interlacing(spec, u);
  for (int i = 1; i <= spec.ell(); ++i) {
    if (u[i - 1] == spec.b(i - 1) || u[i - 1] == spec.b(i)) {
      std::ostringstream os;
      os << "u_" << i << " coincides with an eigenvalue: the separated chart is singular there";
      throw PreconditionError(os.str());
    }
    if (i > 1 && u[i - 1] == u[i - 2]) throw PreconditionError("coincident separated coordinates");
  }
}

// Root of the decreasing function f(z) = sum xi^2 / (z - b) in (lo, hi),
// where f runs from +inf to -inf.
inline double pole_interval_root(const SpectrumSpec& spec, const Vector& xi2, double lo, double hi) {
  auto f = [&](double z) {
    double v = 0.0;
    for (int s = 0; s <= spec.ell(); ++s) v += xi2[s] / (z - spec.b(s));
    return v;
  };
  auto df = [&](double z) {
    double v = 0.0;
    for (int s = 0; s <= spec.ell(); ++s) v -= xi2[s] / ((z - spec.b(s)) * (z - spec.b(s)));
    return v;
  };
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 300; ++it) {
    const double fx = f(x);
    if (fx == 0.0) return x;
    if (fx > 0.0)
      lo = x;
    else
      hi = x;
    if (hi - lo <= 1e-15 * std::max({std::abs(lo), std::abs(hi), 1e-300})) break;
    double next = x - fx / df(x);
    if (!(next > lo && next < hi) || it % 6 == 5) next = 0.5 * (lo + hi);
    if (next == x) break;
    x = next;
  }
  return x;
}

} // namespace detail

/// Separated coordinates of a regular reduced point. The signs of the xi_s
/// are irrelevant: only xi_s^2 and xi_s eta_s enter.
inline SeparatedState to_separated(const SpectrumSpec& spec, const Vector& w, const Vector& xi, const Vector& eta) {
  detail::check_reduced_sizes(spec, w, xi, eta);
  const int l = spec.ell();
  for (int s = 0; s <= l; ++s)
    if (xi[s] == 0.0) {
      std::ostringstream os;
      os << "xi_" << s << " = 0: the point lies on a coordinate hyperplane where the separated chart degenerates";
      throw PreconditionError(os.str());
    }
  const Vector xi2 = xi.array().square().matrix() / xi.squaredNorm();
  SeparatedState st{Vector(l), Vector(l), {}};
  const double tol = 1e-10 * detail::chart_scale(spec);
  for (int i = 1; i <= l; ++i) {
    const double u = detail::pole_interval_root(spec, xi2, spec.b(i - 1), spec.b(i));
    st.u[i - 1] = u;
    for (int s : {i - 1, i})
      if (std::abs(u - spec.b(s)) < tol) {
        std::ostringstream os;
        os.precision(3);
        os << "u_" << i << " is within " << std::abs(u - spec.b(s)) << " of b_" << s
           << ": separated chart is nearly singular, prefer the (V, T, S) invariants";
        st.warnings.push_back(os.str());
      }
  }
  const Polynomial a = eigenvalue_polynomial(spec);
  const Polynomial du = Polynomial::from_roots(std::vector<double>(st.u.data(), st.u.data() + l)).derivative();
  for (int i = 0; i < l; ++i) {
    double num = 0.0, den = 0.0;
    for (int s = 0; s <= l; ++s) {
      const double d = st.u[i] - spec.b(s);
      num += 2.0 * xi[s] * eta[s] / d;
      den += xi[s] * xi[s] / (d * d);
    }
    const double udot = num / den;
    st.p[i] = udot * du(st.u[i]) / (-4.0 * a(st.u[i]));
  }
  return st;
}

/// xi_s^2 = U(b_s) / A'(b_s), with U(z) = prod (z - u_i).
inline Vector from_separated(const SpectrumSpec& spec, const Vector& u) {
  detail::check_interlacing(spec, u);
  Vector xi2(spec.block_count());
  for (int s = 0; s <= spec.ell(); ++s) {
    double v = 1.0;
    for (int i = 0; i < spec.ell(); ++i) v *= spec.b(s) - u[i];
    // Interlacing makes U(b_s) and A'(b_s) share a sign; clamp rounding at the boundary.
    xi2[s] = std::max(0.0, v / eigenvalue_derivative(spec, s));
  }
  return xi2;
}

/// The regular reduced point with xi_s >= 0 lying over (u, p).
inline RegularCoordinates regular_from_separated(const SpectrumSpec& spec, const Vector& w, const Vector& u,
                                                 const Vector& p) {
  detail::check_open_chart(spec, u);
  if (p.size() != spec.ell()) throw ConfigError("p must have l entries");
  const int l = spec.ell();
  const Polynomial a = eigenvalue_polynomial(spec);
  const Polynomial du = Polynomial::from_roots(std::vector<double>(u.data(), u.data() + l)).derivative();
  Vector udot(l);
  for (int i = 0; i < l; ++i) udot[i] = p[i] * (-4.0 * a(u[i])) / du(u[i]);
  RegularCoordinates rc{from_separated(spec, u).cwiseSqrt(), Vector(l + 1), w};
  for (int s = 0; s <= l; ++s) {
    double acc = 0.0;
    for (int i = 0; i < l; ++i) acc += udot[i] / (spec.b(s) - u[i]);
    rc.eta[s] = -0.5 * rc.xi[s] * acc;
  }
  return rc;
}

/// Inverse metric coefficient 1/g_i = -4 A(u_i) / U'(u_i), positive on the open chamber.
inline Vector inverse_metric(const SpectrumSpec& spec, const Vector& u) {
  detail::check_open_chart(spec, u);
  const int l = spec.ell();
  const Polynomial a = eigenvalue_polynomial(spec);
  const Polynomial du = Polynomial::from_roots(std::vector<double>(u.data(), u.data() + l)).derivative();
  Vector g(l);
  for (int i = 0; i < l; ++i) g[i] = -4.0 * a(u[i]) / du(u[i]);
  return g;
}

/// H = sum 1/(2 g_i) p_i^2 + 1/2 (sum b_s - sum u_i) + sum Qt(u_i) / (2 A(u_i) U'(u_i)).
inline double hamiltonian_separated(const SpectrumSpec& spec, const Vector& w, const Vector& u, const Vector& p) {
  const Vector g = inverse_metric(spec, u);
  if (p.size() != spec.ell()) throw ConfigError("p must have l entries");
  const int l = spec.ell();
  const Polynomial a = eigenvalue_polynomial(spec);
  const Polynomial qt = casimir_polynomial(spec, w);
  const Polynomial du = Polynomial::from_roots(std::vector<double>(u.data(), u.data() + l)).derivative();
  double h = 0.5 * (spec.eigenvalue_sum() - u.sum());
  for (int i = 0; i < l; ++i) {
    h += 0.5 * g[i] * p[i] * p[i];
    h += qt(u[i]) / (2.0 * a(u[i]) * du(u[i]));
  }
  return h;
}

/// Coefficients rho_1..rho_l of P(z) = rho_1 z^(l-1) + ... + rho_l, fixed by
/// P(u_i) = -2 A(u_i) p_i^2 - u_i^l / 2 + Qt(u_i) / (2 A(u_i)); equivalently
/// R(u_i) = (2 A(u_i) p_i)^2 on the curve they define.
inline Vector separation_constants(const SpectrumSpec& spec, const Vector& w, const Vector& u, const Vector& p) {
  detail::check_open_chart(spec, u);
  if (p.size() != spec.ell()) throw ConfigError("p must have l entries");
  const int l = spec.ell();
  const Polynomial a = eigenvalue_polynomial(spec);
  const Polynomial qt = casimir_polynomial(spec, w);
  Polynomial pz = Polynomial::constant(0.0);
  for (int i = 0; i < l; ++i) {
    const double ai = a(u[i]);
    const double value = -2.0 * ai * p[i] * p[i] - 0.5 * std::pow(u[i], l) + qt(u[i]) / (2.0 * ai);
    Polynomial basis = Polynomial::constant(value);
    for (int k = 0; k < l; ++k)
      if (k != i) basis = (1.0 / (u[i] - u[k])) * (basis * Polynomial{-u[k], 1.0});
    pz = pz + basis;
  }
  Vector rho(l);
  for (int k = 1; k <= l; ++k) rho[k - 1] = pz.coefficient(l - k);
  return rho;
}

/// Residuals of the partial-fraction identities behind the separation:
/// sum u_i^(l-1) / U'(u_i) = 1, sum u_i^l / U'(u_i) = sum u_i and
/// sum P(u_i) / U'(u_i) = leading coefficient of P (deg P <= l - 1).
struct JacobiResiduals {
  double normalization = 0.0;
  double trace = 0.0;
  double leading = 0.0;
};

inline JacobiResiduals jacobi_identities(const Vector& u, const Polynomial& p) {
  const int l = static_cast<int>(u.size());
  if (l < 1) throw ConfigError("jacobi_identities needs at least one root");
  if (p.degree() > l - 1) throw ConfigError("P must have degree at most l - 1");
  for (int i = 0; i < l; ++i)
    for (int k = i + 1; k < l; ++k)
      if (u[i] == u[k]) throw PreconditionError("jacobi_identities needs distinct roots");
  detail::CompensatedSum n, t, lead;
  for (int i = 0; i < l; ++i) {
    double d = 1.0;  // U'(u_i) as a product of root differences
    for (int k = 0; k < l; ++k)
      if (k != i) d *= u[i] - u[k];
    n.add(std::pow(u[i], l - 1) / d);
    t.add(std::pow(u[i], l) / d);
    lead.add(p.evaluate_compensated(u[i]) / d);
  }
  JacobiResiduals r;
  r.normalization = std::abs(1.0 - n.value());
  r.trace = std::abs(u.sum() - t.value());
  r.leading = std::abs(p.coefficient(l - 1) - lead.value());
  return r;
}

} // namespace neumann
