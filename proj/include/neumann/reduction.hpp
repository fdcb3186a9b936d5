#pragma once

// Reduction of the block-orthogonal symmetry.
//
// Singular reduction uses the invariants (V_s, T_s, S_s) of each block,
// regular reduction the coordinates (xi_s, eta_s) on T*S^l together with the
// fixed Casimir values w_s. The reduced system is the Rosochatius system
//   H = 1/2 sum eta_s^2 + 1/2 sum (b_s xi_s^2 + w_s / xi_s^2).

#include <cmath>
#include <sstream>
#include <string>

#include "neumann/model.hpp"
#include "neumann/poisson.hpp"

namespace neumann {

/// Per-block invariants V = |P x|^2 / 2, T = |P y|^2 / 2, S = <P x, P y>
/// and the Casimir values w = 4 V T - S^2.
struct ReducedState {
  Vector v;
  Vector t;
  Vector s;
  Vector w;

  int blocks() const { return static_cast<int>(v.size()); }
  double c1() const { return 2.0 * v.sum(); }
  double c2() const { return s.sum(); }
};

inline ReducedState hilbert_map(const SpectrumSpec& spec, const PhasePoint& p) {
  check_dimension(spec, p);
  const int nb = spec.block_count();
  ReducedState r{Vector(nb), Vector(nb), Vector(nb), Vector(nb)};
  for (int s = 0; s < nb; ++s) {
    const auto px = p.x.segment(spec.block_begin(s), spec.m(s));
    const auto py = p.y.segment(spec.block_begin(s), spec.m(s));
    r.v[s] = 0.5 * px.squaredNorm();
    r.t[s] = 0.5 * py.squaredNorm();
    r.s[s] = px.dot(py);
    // The Lagrange identity form is exactly nonnegative and exactly zero for m_s = 1.
    r.w[s] = block_casimir(spec, p, s);
  }
  return r;
}

/// Block invariant used as an argument of the reduced bracket.
struct BlockInvariant {
  enum class Kind { V, T, S };
  Kind kind;
  int block;
};

/// Closed bracket table on the (V, T, S) coordinates.
inline double reduced_bracket(BlockInvariant a, BlockInvariant b, const ReducedState& st) {
  using K = BlockInvariant::Kind;
  const double c1 = st.c1();
  if (c1 == 0.0) throw PreconditionError("reduced bracket is singular at C1 = 0");
  const int i = a.block;
  const int k = b.block;
  const double d = i == k ? 1.0 : 0.0;
  auto swapped = [&]() { return -reduced_bracket(b, a, st); };
  switch (a.kind) {
  case K::V:
    switch (b.kind) {
    case K::V: return 0.0;
    case K::T: return st.s[k] * (d - 2.0 * st.v[i] / c1);
    case K::S: return 2.0 * st.v[i] * (d - 2.0 * st.v[k] / c1);
    }
    break;
  case K::T:
    switch (b.kind) {
    case K::V: return swapped();
    case K::T: return (2.0 * st.t[i] * st.s[k] - 2.0 * st.t[k] * st.s[i]) / c1;
    case K::S: return -2.0 * st.t[i] * (d - 2.0 * st.v[k] / c1);
    }
    break;
  case K::S:
    switch (b.kind) {
    case K::S: return 0.0;
    default: return swapped();
    }
  }
  return 0.0;
}

/// Bracket matrix on (V_0, T_0, S_0, V_1, ...).
inline Matrix reduced_poisson_matrix(const ReducedState& st) {
  using K = BlockInvariant::Kind;
  const int nb = st.blocks();
  Matrix m(3 * nb, 3 * nb);
  const K kinds[3] = {K::V, K::T, K::S};
  for (int i = 0; i < nb; ++i)
    for (int a = 0; a < 3; ++a)
      for (int k = 0; k < nb; ++k)
        for (int b = 0; b < 3; ++b)
          m(3 * i + a, 3 * k + b) = reduced_bracket({kinds[a], i}, {kinds[b], k}, st);
  return m;
}

/// Gradients of the Casimirs C1, C2, W_0..W_l on (V, T, S) coordinates, one per column.
inline Matrix reduced_casimir_gradients(const ReducedState& st) {
  const int nb = st.blocks();
  Matrix g = Matrix::Zero(3 * nb, nb + 2);
  for (int s = 0; s < nb; ++s) {
    g(3 * s, 0) = 2.0;
    g(3 * s + 2, 1) = 1.0;
    g(3 * s, 2 + s) = 4.0 * st.t[s];
    g(3 * s + 1, 2 + s) = 4.0 * st.v[s];
    g(3 * s + 2, 2 + s) = -2.0 * st.s[s];
  }
  return g;
}

/// Singular form of the reduced Hamiltonian, sum_s T_s + b_s V_s.
inline double reduced_hamiltonian(const SpectrumSpec& spec, const ReducedState& st) {
  double h = 0.0;
  for (int s = 0; s <= spec.ell(); ++s) h += st.t[s] + spec.b(s) * st.v[s];
  return h;
}

/// Regular coordinates on T*S^l with the Casimir values they were reduced at.
struct RegularCoordinates {
  Vector xi;
  Vector eta;
  Vector w;
};

/// xi_s = |P_s x|, eta_s = <P_s x, P_s y> / |P_s x| for m_s >= 2; signed
/// (x_s, y_s) for m_s = 1.
inline RegularCoordinates regular_coordinates(const SpectrumSpec& spec, const PhasePoint& p) {
  check_dimension(spec, p);
  const int nb = spec.block_count();
  RegularCoordinates rc{Vector(nb), Vector(nb), Vector(nb)};
  for (int s = 0; s < nb; ++s) {
    const auto px = p.x.segment(spec.block_begin(s), spec.m(s));
    const auto py = p.y.segment(spec.block_begin(s), spec.m(s));
    if (spec.m(s) == 1) {
      rc.xi[s] = px[0];
      rc.eta[s] = py[0];
      rc.w[s] = 0.0;
      continue;
    }
    const double r = px.norm();
    const double w = block_casimir(spec, p, s);
    if (r == 0.0) {
      std::ostringstream os;
      os << "block " << s << " has P x = 0";
      if (w == 0.0)
        os << " and W = 0: the point lies on a singular stratum, use hilbert_map";
      else
        os << " with W > 0, which is impossible for a finite momentum";
      throw PreconditionError(os.str());
    }
    if (w == 0.0) {
      std::ostringstream os;
      os << "block " << s << " has W = 0: singular stratum, use hilbert_map";
      throw PreconditionError(os.str());
    }
    rc.xi[s] = r;
    rc.eta[s] = px.dot(py) / r;
    rc.w[s] = w;
  }
  return rc;
}

namespace detail {

inline void check_regular_chart(const Vector& w, const Vector& xi) {
  for (Eigen::Index s = 0; s < xi.size(); ++s)
    if (w[s] != 0.0 && xi[s] == 0.0) {
      std::ostringstream os;
      os << "xi_" << s << " = 0 while w_" << s << " != 0: inverse-square term is singular";
      throw PreconditionError(os.str());
    }
}

inline void check_reduced_sizes(const SpectrumSpec& spec, const Vector& w, const Vector& xi, const Vector& eta) {
  const Eigen::Index nb = spec.block_count();
  if (w.size() != nb || xi.size() != nb || eta.size() != nb)
    throw ConfigError("reduced state must have one entry per eigenvalue block");
}

} // namespace detail

/// Amended potential V_mu = 1/2 sum (b_s xi_s^2 + w_s / xi_s^2).
inline double amended_potential(const SpectrumSpec& spec, const Vector& w, const Vector& xi) {
  double v = 0.0;
  for (int s = 0; s <= spec.ell(); ++s) {
    v += spec.b(s) * xi[s] * xi[s];
    if (w[s] != 0.0) v += w[s] / (xi[s] * xi[s]);
  }
  return 0.5 * v;
}

inline Vector amended_potential_gradient(const SpectrumSpec& spec, const Vector& w, const Vector& xi) {
  Vector g(xi.size());
  for (int s = 0; s <= spec.ell(); ++s) {
    g[s] = spec.b(s) * xi[s];
    if (w[s] != 0.0) g[s] -= w[s] / (xi[s] * xi[s] * xi[s]);
  }
  return g;
}

inline double reduced_hamiltonian(const SpectrumSpec& spec, const Vector& w, const Vector& xi, const Vector& eta) {
  detail::check_reduced_sizes(spec, w, xi, eta);
  detail::check_regular_chart(w, xi);
  return 0.5 * eta.squaredNorm() + amended_potential(spec, w, xi);
}

inline double reduced_hamiltonian(const SpectrumSpec& spec, const RegularCoordinates& rc) {
  return reduced_hamiltonian(spec, rc.w, rc.xi, rc.eta);
}

/// Hilbert map of the Rosochatius system: V = xi^2/2, T = eta^2/2 + w/(2 xi^2), S = xi eta.
inline ReducedState rosochatius_invariants(const SpectrumSpec& spec, const Vector& w, const Vector& xi,
                                           const Vector& eta) {
  detail::check_reduced_sizes(spec, w, xi, eta);
  detail::check_regular_chart(w, xi);
  const int nb = spec.block_count();
  ReducedState r{Vector(nb), Vector(nb), Vector(nb), w};
  for (int s = 0; s < nb; ++s) {
    r.v[s] = 0.5 * xi[s] * xi[s];
    r.t[s] = 0.5 * eta[s] * eta[s] + (w[s] != 0.0 ? 0.5 * w[s] / (xi[s] * xi[s]) : 0.0);
    r.s[s] = xi[s] * eta[s];
  }
  return r;
}

/// Dirac-bracket flow of the Rosochatius Hamiltonian on T*S^l.
inline PhaseVelocity reduced_vector_field(const SpectrumSpec& spec, const Vector& w, const Vector& xi,
                                          const Vector& eta) {
  detail::check_reduced_sizes(spec, w, xi, eta);
  detail::check_regular_chart(w, xi);
  return sphere_vector_field(xi, eta, amended_potential_gradient(spec, w, xi));
}

/// A point of T*S^n whose regular coordinates are (xi, eta, w): in each
/// block with m_s >= 2, x = xi e_1 and y = eta e_1 + (sqrt(w) / xi) e_2.
inline PhasePoint lift_to_phase_space(const SpectrumSpec& spec, const RegularCoordinates& rc) {
  detail::check_reduced_sizes(spec, rc.w, rc.xi, rc.eta);
  PhasePoint p{Vector::Zero(spec.dimension()), Vector::Zero(spec.dimension())};
  for (int s = 0; s <= spec.ell(); ++s) {
    const int o = spec.block_begin(s);
    p.x[o] = rc.xi[s];
    p.y[o] = rc.eta[s];
    if (spec.m(s) == 1) {
      if (rc.w[s] != 0.0) throw PreconditionError("a block with m = 1 carries no Casimir; w must be 0");
      continue;
    }
    if (rc.w[s] < 0.0) throw PreconditionError("negative Casimir value has no phase-space lift");
    if (rc.w[s] > 0.0) {
      if (rc.xi[s] == 0.0) throw PreconditionError("xi = 0 with w > 0 has no phase-space lift");
      p.y[o + 1] = std::sqrt(rc.w[s]) / rc.xi[s];
    }
  }
  return p;
}

/// Reduced-space projection onto T*S^l, mirroring the full-space one.
inline void project_reduced(Vector& xi, Vector& eta) {
  const double r = xi.norm();
  xi /= r;
  eta -= xi.dot(eta) * xi;
}

} // namespace neumann
