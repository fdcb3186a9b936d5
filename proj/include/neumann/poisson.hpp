#pragma once

// Dirac bracket on R^{2d} and the conserved quantities of the degenerate
// Neumann system.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "neumann/model.hpp"

namespace neumann {

/// A scalar function on R^{2d} with its gradient (packed as d/dx, d/dy).
/// When no analytic gradient is supplied, central differences with step
/// h = 1e-6 (1 + |p|) are used.
struct Observable {
  std::function<double(const PhasePoint&)> value;
  std::function<Vector(const PhasePoint&)> analytic_gradient;

  double operator()(const PhasePoint& p) const { return value(p); }

  Vector gradient(const PhasePoint& p) const {
    if (analytic_gradient) return analytic_gradient(p);
    return finite_difference_gradient(p);
  }

  Vector finite_difference_gradient(const PhasePoint& p) const {
    const Vector z = p.packed();
    const double h = 1e-6 * (1.0 + z.norm());
    Vector g(z.size());
    Vector zp = z;
    for (Eigen::Index k = 0; k < z.size(); ++k) {
      zp[k] = z[k] + h;
      const double fp = value(PhasePoint::unpack(zp));
      zp[k] = z[k] - h;
      const double fm = value(PhasePoint::unpack(zp));
      zp[k] = z[k];
      g[k] = (fp - fm) / (2.0 * h);
    }
    return g;
  }
};

inline Observable numeric_observable(std::function<double(const PhasePoint&)> f) { return {std::move(f), {}}; }

/// Canonical bracket [f,g] from packed gradients.
inline double canonical_bracket(const Vector& df, const Vector& dg) {
  const Eigen::Index d = df.size() / 2;
  return df.head(d).dot(dg.tail(d)) - df.tail(d).dot(dg.head(d));
}

/// {f,g} = [f,g] + ([f,C1][C2,g] - [f,C2][C1,g]) / (2 C1), from gradients.
inline double dirac_bracket(const Vector& df, const Vector& dg, const PhasePoint& p) {
  const double c1 = p.x.squaredNorm();
  if (c1 == 0.0) throw PreconditionError("Dirac bracket is singular at x = 0 (C1 = 0)");
  const Eigen::Index d = p.x.size();
  Vector dc1 = Vector::Zero(2 * d);
  dc1.head(d) = 2.0 * p.x;
  Vector dc2(2 * d);
  dc2 << p.y, p.x;
  const double f_c1 = canonical_bracket(df, dc1);
  const double f_c2 = canonical_bracket(df, dc2);
  const double c1_g = canonical_bracket(dc1, dg);
  const double c2_g = canonical_bracket(dc2, dg);
  return canonical_bracket(df, dg) + (f_c1 * c2_g - f_c2 * c1_g) / (2.0 * c1);
}

inline double dirac_bracket(const Observable& f, const Observable& g, const PhasePoint& p) {
  return dirac_bracket(f.gradient(p), g.gradient(p), p);
}

/// Hamiltonian vector field of an observable under the Dirac bracket,
/// d/dt z_k = {z_k, f}.
inline Vector dirac_hamiltonian_field(const Vector& df, const PhasePoint& p) {
  const Eigen::Index d = p.x.size();
  Vector out(2 * d);
  Vector e = Vector::Zero(2 * d);
  for (Eigen::Index k = 0; k < 2 * d; ++k) {
    e[k] = 1.0;
    out[k] = dirac_bracket(e, df, p);
    e[k] = 0.0;
  }
  return out;
}

inline double angular_momentum(const PhasePoint& p, int i, int k) { return p.x[i] * p.y[k] - p.x[k] * p.y[i]; }

namespace detail {

// Accumulates c * d(L_ik) into a packed gradient.
inline void add_angular_momentum_gradient(Vector& g, const PhasePoint& p, int i, int k, double c) {
  const Eigen::Index d = p.x.size();
  g[i] += c * p.y[k];
  g[k] -= c * p.y[i];
  g[d + k] += c * p.x[i];
  g[d + i] -= c * p.x[k];
}

} // namespace detail

/// Momentum of one O(m_s) factor.
struct BlockMomentum {
  int block = 0;
  Matrix mu;       // antisymmetric, entries L_ik for i,k in I_s
  double casimir;  // W_s = sum_{i<k} L_ik^2
  /// L_ik for m_s = 2, the signed alternative to sqrt(W_s).
  std::optional<double> signed_action;

  double action() const { return std::sqrt(casimir); }
};

using MomentumValue = std::vector<BlockMomentum>;

/// Block momenta mu_s for every block with m_s >= 2.
inline MomentumValue momentum_map(const SpectrumSpec& spec, const PhasePoint& p) {
  check_dimension(spec, p);
  MomentumValue out;
  for (int s = 0; s <= spec.ell(); ++s) {
    const int m = spec.m(s);
    if (m < 2) continue;
    const int o = spec.block_begin(s);
    BlockMomentum bm;
    bm.block = s;
    bm.mu = Matrix::Zero(m, m);
    double w = 0.0;
    for (int i = 0; i < m; ++i)
      for (int k = i + 1; k < m; ++k) {
        const double l = angular_momentum(p, o + i, o + k);
        bm.mu(i, k) = l;
        bm.mu(k, i) = -l;
        w += l * l;
      }
    bm.casimir = w;
    if (m == 2) bm.signed_action = bm.mu(0, 1);
    out.push_back(std::move(bm));
  }
  return out;
}

/// W_s = |P_s x|^2 |P_s y|^2 - <P_s x, P_s y>^2 = sum_{i<k in I_s} L_ik^2; zero for m_s = 1.
inline double block_casimir(const SpectrumSpec& spec, const PhasePoint& p, int s) {
  double w = 0.0;
  for (int i = spec.block_begin(s); i < spec.block_end(s); ++i)
    for (int k = i + 1; k < spec.block_end(s); ++k) {
      const double l = angular_momentum(p, i, k);
      w += l * l;
    }
  return w;
}

/// Degenerate integral F_s = sum_{i in I_s} x_i^2 + sum_{t != s} sum_{k in I_s, l in I_t} L_kl^2 / (b_s - b_t).
inline double integral_f(const SpectrumSpec& spec, const PhasePoint& p, int s) {
  double f = p.x.segment(spec.block_begin(s), spec.m(s)).squaredNorm();
  for (int t = 0; t <= spec.ell(); ++t) {
    if (t == s) continue;
    const double inv = 1.0 / (spec.b(s) - spec.b(t));
    for (int k = spec.block_begin(s); k < spec.block_end(s); ++k)
      for (int l = spec.block_begin(t); l < spec.block_end(t); ++l) {
        const double a = angular_momentum(p, k, l);
        f += a * a * inv;
      }
  }
  return f;
}

/// Uhlenbeck integral F~_nu = x_nu^2 + sum_{mu != nu} L_{nu mu}^2 / (a_nu - a_mu) for pairwise distinct a.
inline double generic_integral(const std::vector<double>& a, const PhasePoint& p, int nu) {
  if (static_cast<Eigen::Index>(a.size()) != p.x.size())
    throw ConfigError("generic_integral: coefficient count does not match the dimension");
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = i + 1; k < a.size(); ++k)
      if (a[i] == a[k]) throw ConfigError("generic_integral: coefficients must be pairwise distinct");
  double f = p.x[nu] * p.x[nu];
  for (int mu = 0; mu < static_cast<int>(a.size()); ++mu) {
    if (mu == nu) continue;
    const double l = angular_momentum(p, nu, mu);
    f += l * l / (a[static_cast<std::size_t>(nu)] - a[static_cast<std::size_t>(mu)]);
  }
  return f;
}

/// Norm of the full angular momentum, J = sqrt(|x|^2 |y|^2 - <x,y>^2).
inline double total_angular_momentum(const PhasePoint& p) {
  const double v = p.x.squaredNorm() * p.y.squaredNorm() - std::pow(p.x.dot(p.y), 2);
  return std::sqrt(std::max(v, 0.0));
}

/// Time-t map of the 2 pi periodic flow generated by J: every pair
/// (x_nu, y_nu) is moved by cos(t) id + sin(t) S M with
/// S M = (1/J) [[-<x,y>, |x|^2], [-|y|^2, <x,y>]].
inline PhasePoint j_flow(const PhasePoint& p, double t) {
  const double j = total_angular_momentum(p);
  if (!(j > 0.0)) throw PreconditionError("J-flow is undefined where J = 0 (x parallel to y)");
  const double xx = p.x.squaredNorm();
  const double yy = p.y.squaredNorm();
  const double xy = p.x.dot(p.y);
  const double c = std::cos(t);
  const double sn = std::sin(t) / j;
  return {c * p.x + sn * (-xy * p.x + xx * p.y), c * p.y + sn * (-yy * p.x + xy * p.y)};
}

// Built-in observables with analytic gradients.
namespace observables {

inline Observable position(int nu) {
  return {[nu](const PhasePoint& p) { return p.x[nu]; },
          [nu](const PhasePoint& p) {
            Vector g = Vector::Zero(2 * p.x.size());
            g[nu] = 1.0;
            return g;
          }};
}

inline Observable momentum(int nu) {
  return {[nu](const PhasePoint& p) { return p.y[nu]; },
          [nu](const PhasePoint& p) {
            Vector g = Vector::Zero(2 * p.x.size());
            g[p.x.size() + nu] = 1.0;
            return g;
          }};
}

inline Observable c1() {
  return {[](const PhasePoint& p) { return p.x.squaredNorm(); },
          [](const PhasePoint& p) {
            Vector g = Vector::Zero(2 * p.x.size());
            g.head(p.x.size()) = 2.0 * p.x;
            return g;
          }};
}

inline Observable c2() {
  return {[](const PhasePoint& p) { return p.x.dot(p.y); },
          [](const PhasePoint& p) {
            Vector g(2 * p.x.size());
            g << p.y, p.x;
            return g;
          }};
}

inline Observable angular_momentum(int i, int k) {
  return {[i, k](const PhasePoint& p) { return neumann::angular_momentum(p, i, k); },
          [i, k](const PhasePoint& p) {
            Vector g = Vector::Zero(2 * p.x.size());
            detail::add_angular_momentum_gradient(g, p, i, k, 1.0);
            return g;
          }};
}

inline Observable hamiltonian(const SpectrumSpec& spec) {
  return {[spec](const PhasePoint& p) { return neumann::hamiltonian(spec, p); },
          [spec](const PhasePoint& p) {
            Vector g(2 * p.x.size());
            g << potential_gradient(spec, p.x), p.y;
            return g;
          }};
}

inline Observable block_casimir(const SpectrumSpec& spec, int s) {
  return {[spec, s](const PhasePoint& p) { return neumann::block_casimir(spec, p, s); },
          [spec, s](const PhasePoint& p) {
            Vector g = Vector::Zero(2 * p.x.size());
            for (int i = spec.block_begin(s); i < spec.block_end(s); ++i)
              for (int k = i + 1; k < spec.block_end(s); ++k)
                detail::add_angular_momentum_gradient(g, p, i, k, 2.0 * neumann::angular_momentum(p, i, k));
            return g;
          }};
}

inline Observable integral_f(const SpectrumSpec& spec, int s) {
  return {[spec, s](const PhasePoint& p) { return neumann::integral_f(spec, p, s); },
          [spec, s](const PhasePoint& p) {
            Vector g = Vector::Zero(2 * p.x.size());
            for (int i = spec.block_begin(s); i < spec.block_end(s); ++i) g[i] += 2.0 * p.x[i];
            for (int t = 0; t <= spec.ell(); ++t) {
              if (t == s) continue;
              const double inv = 1.0 / (spec.b(s) - spec.b(t));
              for (int k = spec.block_begin(s); k < spec.block_end(s); ++k)
                for (int l = spec.block_begin(t); l < spec.block_end(t); ++l)
                  detail::add_angular_momentum_gradient(g, p, k, l, 2.0 * neumann::angular_momentum(p, k, l) * inv);
            }
            return g;
          }};
}

} // namespace observables

} // namespace neumann
