#pragma once

// Actions and frequencies of the separated system.
//
// For bounded motion the curve R has 2l+1 real roots z_1 < b_0 < z_2 <= z_3
// < b_1 < ... and u_i oscillates on the segment [z_2i, z_2i+1] where R >= 0.
// The actions are I_i = (gamma_i / 2 pi) int sqrt(R) / |A| dz over that
// segment and J_s = sqrt(w_s).

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "neumann/error.hpp"
#include "neumann/model.hpp"
#include "neumann/polynomial.hpp"
#include "neumann/separation.hpp"

namespace neumann {

/// All complex roots, from the eigenvalues of the companion matrix.
inline std::vector<std::complex<double>> complex_roots(const Polynomial& p) {
  const int d = p.degree();
  if (d < 1) return {};
  Matrix c = Matrix::Zero(d, d);
  for (int k = 1; k < d; ++k) c(k, k - 1) = 1.0;
  for (int k = 0; k < d; ++k) c(k, d - 1) = -p.coefficient(k) / p.leading();
  Eigen::EigenSolver<Matrix> es(c, false);
  std::vector<std::complex<double>> out(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) out[static_cast<std::size_t>(k)] = es.eigenvalues()[k];
  return out;
}

/// Smallest distance between two roots, counted in the complex plane so
/// that nearly double roots which split into a conjugate pair are seen too.
inline double min_root_distance(const std::vector<std::complex<double>>& roots) {
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < roots.size(); ++i)
    for (std::size_t k = i + 1; k < roots.size(); ++k) g = std::min(g, std::abs(roots[i] - roots[k]));
  return g;
}

inline double curve_scale(const HyperellipticCurve& c) {
  return 1.0 + std::max(std::abs(c.b.front()), std::abs(c.b.back()));
}

struct BranchPoints {
  std::vector<double> z;  // sorted, 2l+1 entries
  double min_gap = 0.0;
  bool near_discriminant = false;  // two roots closer than 1e-8 * scale
};

/// Real roots of R checked against the bounded-motion pattern: one root left
/// of b_0 and two in each [b_i-1, b_i].
inline BranchPoints branch_points(const HyperellipticCurve& c) {
  const int l = c.genus();
  const double scale = curve_scale(c);
  const double tol = 1e-9 * scale;
  BranchPoints bp;
  bp.z = c.real_roots;
  if (static_cast<int>(bp.z.size()) != 2 * l + 1) {
    double imag = std::numeric_limits<double>::infinity();
    for (const auto& r : complex_roots(c.r))
      if (r.imag() != 0.0) imag = std::min(imag, std::abs(r.imag()));
    std::ostringstream os;
    os.precision(3);
    os << "curve has " << bp.z.size() << " real roots, expected " << 2 * l + 1
       << " for bounded motion; smallest imaginary part among the complex roots is " << imag
       << " (parameters are beyond or near the discriminant locus)";
    throw NumericalError(os.str());
  }
  bool placed = bp.z[0] <= c.b[0] + tol;
  for (int i = 1; i <= l && placed; ++i) {
    const double lo = c.b[static_cast<std::size_t>(i - 1)] - tol, hi = c.b[static_cast<std::size_t>(i)] + tol;
    placed = bp.z[static_cast<std::size_t>(2 * i - 1)] >= lo && bp.z[static_cast<std::size_t>(2 * i)] <= hi;
  }
  if (!placed) throw NumericalError("branch points do not interlace with the eigenvalues: motion is not bounded");
  bp.min_gap = min_gap(bp.z);
  bp.near_discriminant = bp.min_gap < 1e-8 * scale;
  return bp;
}

struct MotionSegment {
  double a = 0.0;
  double b = 0.0;
  int eigen_at_a = -1;  // index s with a = b_s, or -1
  int eigen_at_b = -1;

  bool collapsed(double scale) const { return b - a <= 1e-12 * scale; }
};

namespace detail {

inline int matching_eigenvalue(const HyperellipticCurve& c, double z, double tol) {
  for (std::size_t s = 0; s < c.b.size(); ++s)
    if (std::abs(z - c.b[s]) < tol) return static_cast<int>(s);
  return -1;
}

} // namespace detail

/// The segment of [b_i-1, b_i] (i = 1..l) on which R >= 0 and u_i moves.
/// When several qualify (only possible on w_s = 0 strata), `hint` picks the
/// one containing the current u_i.
inline MotionSegment motion_segment(const HyperellipticCurve& c, int i, std::optional<double> hint = std::nullopt) {
  const int l = c.genus();
  if (i < 1 || i > l) throw ConfigError("segment index must be in 1..l");
  const double scale = curve_scale(c);
  const double tol = 1e-9 * scale;
  const double lo = c.b[static_cast<std::size_t>(i - 1)], hi = c.b[static_cast<std::size_t>(i)];
  std::vector<double> roots;
  for (double z : c.real_roots)
    if (z >= lo - tol && z <= hi + tol) roots.push_back(std::clamp(z, lo, hi));
  std::vector<MotionSegment> candidates;
  for (std::size_t k = 0; k + 1 < roots.size(); ++k) {
    const double a = roots[k], b = roots[k + 1];
    const bool collapsed = b - a <= 1e-12 * scale;
    if (collapsed || c(0.5 * (a + b)) > 0.0)
      candidates.push_back({a, b, detail::matching_eigenvalue(c, a, tol), detail::matching_eigenvalue(c, b, tol)});
  }
  if (candidates.empty()) {
    std::ostringstream os;
    os << "no interval of [b_" << i - 1 << ", b_" << i << "] carries motion (R < 0 throughout)";
    throw NumericalError(os.str());
  }
  if (hint) {
    for (const auto& s : candidates)
      if (*hint >= s.a - tol && *hint <= s.b + tol) return s;
    throw PreconditionError("the hint does not lie in any segment where R >= 0");
  }
  // A collapsed pair next to a proper segment is the same root reported twice.
  std::vector<MotionSegment> proper;
  for (const auto& s : candidates)
    if (!s.collapsed(scale)) proper.push_back(s);
  if (proper.empty()) return candidates.front();
  if (proper.size() > 1) throw PreconditionError("several segments carry motion; pass the current u_i as a hint");
  return proper.front();
}

/// Midpoint rule with n nodes for the integral of f over [0, pi].
template <class F>
double cosine_rule(const F& f, int n) {
  detail::CompensatedSum acc;
  for (int k = 0; k < n; ++k) acc.add(f(M_PI * (k + 0.5) / n));
  return acc.value() * M_PI / n;
}

/// Integral of sqrt((z - a)(b - z)) f(z) over [a, b] after z = m + r cos(theta).
template <class F>
double sqrt_weight_rule(const F& f, double a, double b, int n) {
  const double m = 0.5 * (a + b), r = 0.5 * (b - a);
  return cosine_rule(
      [&](double theta) {
        const double st = std::sin(theta);
        return r * r * st * st * f(m + r * std::cos(theta));
      },
      n);
}

struct ActionValue {
  double value = 0.0;
  int gamma = 1;  // 2 when an endpoint is an eigenvalue: the cycle is traversed twice
  MotionSegment segment;
  int nodes = 0;
};

/// I_i over the motion segment, by the substitution z = m + r cos(theta) and
/// the midpoint rule in theta, doubled until the result settles to 1e-11
/// unless a node count is fixed.
inline ActionValue action_integral(const HyperellipticCurve& c, int i, std::optional<double> hint = std::nullopt,
                                   int fixed_nodes = 0) {
  ActionValue out;
  out.segment = motion_segment(c, i, hint);
  const MotionSegment& seg = out.segment;
  const double scale = curve_scale(c);
  out.gamma = (seg.eigen_at_a >= 0 || seg.eigen_at_b >= 0) ? 2 : 1;
  if (seg.collapsed(scale)) return out;
  for (std::size_t s = 0; s < c.b.size(); ++s)
    if (c.b[s] > seg.a + 1e-9 * scale && c.b[s] < seg.b - 1e-9 * scale)
      throw NumericalError("an eigenvalue lies strictly inside a motion segment");

  // Divide the exact eigenvalue roots out of R so that sqrt(R) / |A| stays
  // well conditioned next to them.
  Polynomial deflated = c.r;
  for (int e : {seg.eigen_at_a, seg.eigen_at_b})
    if (e >= 0) deflated = divide(deflated, Polynomial{-c.b[static_cast<std::size_t>(e)], 1.0}).first;
  const double m = 0.5 * (seg.a + seg.b), r = 0.5 * (seg.b - seg.a);
  auto integrand = [&](double theta) {
    const double ct = std::cos(theta);
    const double z = m + r * ct;
    double a_rest = 1.0;
    for (std::size_t s = 0; s < c.b.size(); ++s) {
      if (static_cast<int>(s) == seg.eigen_at_a || static_cast<int>(s) == seg.eigen_at_b) continue;
      a_rest *= std::abs(z - c.b[s]);
    }
    // g is smooth and positive: the deflated curve over its remaining endpoint roots.
    double g = std::abs(deflated.evaluate_compensated(z));
    if (seg.eigen_at_a < 0) g /= r * (1.0 + ct);
    if (seg.eigen_at_b < 0) g /= r * (1.0 - ct);
    // sqrt((z - a)(b - z)) dz = r^2 sin^2(theta) dtheta; an eigenvalue endpoint trades
    // its square-root factor for the 1 / |z - b_s| of 1 / |A|.
    double weight = r * r * (1.0 - ct * ct);
    if (seg.eigen_at_a >= 0 && seg.eigen_at_b >= 0)
      weight = 1.0;
    else if (seg.eigen_at_a >= 0)
      weight = r * (1.0 - ct);
    else if (seg.eigen_at_b >= 0)
      weight = r * (1.0 + ct);
    return weight * std::sqrt(g) / a_rest;
  };
  auto rule = [&](int n) { return cosine_rule(integrand, n); };
  if (fixed_nodes > 0) {
    out.nodes = fixed_nodes;
    out.value = out.gamma * rule(fixed_nodes) / (2.0 * M_PI);
    return out;
  }
  int n = 16;
  double prev = rule(n);
  for (;;) {
    n *= 2;
    const double next = rule(n);
    if (std::abs(next - prev) < 1e-11 * std::max(1.0, std::abs(next))) {
      prev = next;
      break;
    }
    if (n >= (1 << 20)) throw NumericalError("action quadrature did not converge");
    prev = next;
  }
  out.nodes = n;
  out.value = out.gamma * prev / (2.0 * M_PI);
  return out;
}

/// J_s as the residue modulus of zeta / A at b_s: sqrt(-R(b_s)) / |A'(b_s)|.
inline double trivial_action_residue(const HyperellipticCurve& c, int s) {
  if (s < 0 || s >= static_cast<int>(c.b.size())) throw ConfigError("block index out of range");
  if (!(c.w[s] > 0.0)) throw PreconditionError("w_s = 0: zeta / A has no pole at b_s");
  double ad = 1.0;
  for (std::size_t t = 0; t < c.b.size(); ++t)
    if (static_cast<int>(t) != s) ad *= c.b[static_cast<std::size_t>(s)] - c.b[t];
  // R = Qt - Q A with A(b_s) = 0 exactly: only the Casimir polynomial contributes.
  const double r = c.qt.evaluate_compensated(c.b[static_cast<std::size_t>(s)]);
  return std::sqrt(std::max(0.0, -r)) / std::abs(ad);
}

struct ActionSet {
  Vector i;
  Vector j;              // one entry per block with m_s >= 2
  std::vector<int> j_blocks;
  std::vector<int> gamma;
};

/// Blocks carrying a trivial action.
inline std::vector<int> symmetric_blocks(const SpectrumSpec& spec) {
  std::vector<int> out;
  for (int s = 0; s <= spec.ell(); ++s)
    if (spec.m(s) >= 2) out.push_back(s);
  return out;
}

inline ActionSet actions(const SpectrumSpec& spec, const HyperellipticCurve& c,
                         const std::vector<double>& hints = {}) {
  const int l = spec.ell();
  ActionSet a;
  a.i = Vector(l);
  for (int k = 1; k <= l; ++k) {
    std::optional<double> hint;
    if (!hints.empty()) hint = hints.at(static_cast<std::size_t>(k - 1));
    const ActionValue v = action_integral(c, k, hint);
    a.i[k - 1] = v.value;
    a.gamma.push_back(v.gamma);
  }
  a.j_blocks = symmetric_blocks(spec);
  a.j = Vector(static_cast<Eigen::Index>(a.j_blocks.size()));
  for (std::size_t k = 0; k < a.j_blocks.size(); ++k) a.j[static_cast<Eigen::Index>(k)] = std::sqrt(c.w[a.j_blocks[k]]);
  return a;
}

/// T = d(I, J) / d(E, rho_2..rho_l, J) and the frequency matrix Omega = T^-1.
struct PeriodLattice {
  Matrix t;
  Matrix omega;
  std::vector<double> steps;  // finite-difference step per parameter
  std::vector<int> j_blocks;

  /// Frequencies of the energy flow: dE / d(I, J), the first row of Omega.
  Vector frequencies() const { return omega.row(0).transpose(); }
};

/// Parameters: energy E, the remaining separation constants and the Casimir
/// values w. Segments are tracked through the finite differences by their midpoints.
inline PeriodLattice period_lattice(const SpectrumSpec& spec, const Vector& w, const Vector& rho,
                                    const std::vector<double>& hints = {}) {
  const int l = spec.ell();
  const HyperellipticCurve base = build_polynomials(spec, w, rho);
  const BranchPoints bp = branch_points(base);
  if (bp.near_discriminant || bp.min_gap < 1e-6 * curve_scale(base)) {
    std::ostringstream os;
    os.precision(3);
    os << "branch points within " << bp.min_gap << " of each other: the period lattice is ill-conditioned here";
    throw NumericalError(os.str());
  }
  std::vector<double> mids;
  for (int k = 1; k <= l; ++k) {
    std::optional<double> hint;
    if (!hints.empty()) hint = hints.at(static_cast<std::size_t>(k - 1));
    const MotionSegment seg = motion_segment(base, k, hint);
    mids.push_back(0.5 * (seg.a + seg.b));
  }
  const std::vector<int> jb = symmetric_blocks(spec);
  for (int s : jb)
    if (!(w[s] > 0.0)) throw PreconditionError("period lattice needs w_s > 0 on every block with m_s >= 2");
  const int nj = static_cast<int>(jb.size());
  const int dim = l + nj;

  // Parameter vector (rho_1..rho_l, J); rho_1 and E differ by a constant.
  Vector base_params(dim);
  base_params.head(l) = rho;
  for (int k = 0; k < nj; ++k) base_params[l + k] = std::sqrt(w[jb[static_cast<std::size_t>(k)]]);
  auto action_at = [&](const Vector& q) {
    Vector ww = w;
    for (int k = 0; k < nj; ++k) ww[jb[static_cast<std::size_t>(k)]] = q[l + k] * q[l + k];
    const HyperellipticCurve c = build_polynomials(spec, ww, q.head(l));
    Vector out(l);
    for (int k = 1; k <= l; ++k) out[k - 1] = action_integral(c, k, mids[static_cast<std::size_t>(k - 1)]).value;
    return out;
  };

  PeriodLattice pl;
  pl.j_blocks = jb;
  pl.t = Matrix::Zero(dim, dim);
  for (int col = 0; col < dim; ++col) {
    const double h = 1e-5 * std::max(1.0, std::abs(base_params[col]));
    pl.steps.push_back(h);
    auto central = [&](double step) {
      Vector qp = base_params, qm = base_params;
      qp[col] += step;
      qm[col] -= step;
      return Vector((action_at(qp) - action_at(qm)) / (2.0 * step));
    };
    const Vector d = (4.0 * central(0.5 * h) - central(h)) / 3.0;
    pl.t.block(0, col, l, 1) = d;
  }
  pl.t.bottomRightCorner(nj, nj).setIdentity();
  pl.omega = pl.t.inverse();
  return pl;
}

} // namespace neumann
