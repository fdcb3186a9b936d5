#pragma once

// Degenerate Neumann system: a particle on S^n in R^{n+1} under the potential
// V = 1/2 <x, A x>, where A is diagonal with eigenvalue b_s repeated m_s times.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "neumann/error.hpp"

namespace neumann {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Distinct eigenvalues b_0 < ... < b_l with multiplicities m_s. The
/// coordinates of each eigenvalue form a consecutive index block I_s.
class SpectrumSpec {
public:
  SpectrumSpec() = default;

  int ell() const { return static_cast<int>(b_.size()) - 1; }
  int block_count() const { return static_cast<int>(b_.size()); }
  /// Ambient dimension n+1.
  int dimension() const { return offsets_.empty() ? 0 : offsets_.back(); }
  int n() const { return dimension() - 1; }
  /// l~ where l~+1 is the number of blocks with m_s >= 2; -1 if there are none.
  int ell_tilde() const {
    return static_cast<int>(std::count_if(m_.begin(), m_.end(), [](int k) { return k >= 2; })) - 1;
  }

  double b(int s) const { return b_[static_cast<std::size_t>(s)]; }
  int m(int s) const { return m_[static_cast<std::size_t>(s)]; }
  const std::vector<double>& eigenvalues() const { return b_; }
  const std::vector<int>& multiplicities() const { return m_; }

  int block_begin(int s) const { return offsets_[static_cast<std::size_t>(s)]; }
  int block_end(int s) const { return offsets_[static_cast<std::size_t>(s) + 1]; }
  int block_of(int nu) const {
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), nu);
    return static_cast<int>(it - offsets_.begin()) - 1;
  }
  /// Diagonal entry a_nu of A.
  double coefficient(int nu) const { return b(block_of(nu)); }

  /// Sum of the distinct eigenvalues, B.
  double eigenvalue_sum() const { return std::accumulate(b_.begin(), b_.end(), 0.0); }

  friend SpectrumSpec validate_spectrum(std::vector<double> b, std::vector<int> m);

private:
  std::vector<double> b_;
  std::vector<int> m_;
  std::vector<int> offsets_;  // size l+2, offsets_[s] = first index of I_s
};

inline SpectrumSpec validate_spectrum(std::vector<double> b, std::vector<int> m) {
  if (b.empty()) throw ConfigError("spectrum: eigenvalue list is empty");
  if (b.size() != m.size()) {
    std::ostringstream os;
    os << "spectrum: " << b.size() << " eigenvalues but " << m.size() << " multiplicities";
    throw ConfigError(os.str());
  }
  for (std::size_t s = 0; s < b.size(); ++s) {
    if (!std::isfinite(b[s])) throw ConfigError("spectrum: b[" + std::to_string(s) + "] is not finite");
    if (m[s] < 1) throw ConfigError("spectrum: m[" + std::to_string(s) + "] must be positive");
    if (s > 0 && !(b[s - 1] < b[s]))
      throw ConfigError("spectrum: b must be strictly increasing (b[" + std::to_string(s - 1) + "] >= b[" +
                        std::to_string(s) + "])");
  }
  SpectrumSpec spec;
  spec.offsets_.assign(1, 0);
  for (int k : m) spec.offsets_.push_back(spec.offsets_.back() + k);
  spec.b_ = std::move(b);
  spec.m_ = std::move(m);
  return spec;
}

/// Maps a user coordinate ordering with arbitrary diagonal coefficients onto
/// the canonical sorted, blocked layout.
struct CanonicalOrdering {
  SpectrumSpec spec;
  /// canonical index -> user index
  std::vector<int> source;

  Vector to_canonical(const Vector& user) const {
    Vector out(static_cast<Eigen::Index>(source.size()));
    for (std::size_t k = 0; k < source.size(); ++k) out[static_cast<Eigen::Index>(k)] = user[source[k]];
    return out;
  }
  Vector to_user(const Vector& canonical) const {
    Vector out(static_cast<Eigen::Index>(source.size()));
    for (std::size_t k = 0; k < source.size(); ++k) out[source[k]] = canonical[static_cast<Eigen::Index>(k)];
    return out;
  }
};

/// Groups exactly equal coefficients a_nu into blocks; a stable sort keeps
/// the relative order of coordinates inside a block.
inline CanonicalOrdering canonicalize(const std::vector<double>& a) {
  if (a.empty()) throw ConfigError("spectrum: coefficient list is empty");
  CanonicalOrdering out;
  out.source.resize(a.size());
  std::iota(out.source.begin(), out.source.end(), 0);
  std::stable_sort(out.source.begin(), out.source.end(), [&](int i, int k) { return a[i] < a[k]; });
  std::vector<double> b;
  std::vector<int> m;
  for (int idx : out.source) {
    if (b.empty() || a[idx] != b.back()) {
      b.push_back(a[idx]);
      m.push_back(1);
    } else {
      ++m.back();
    }
  }
  out.spec = validate_spectrum(std::move(b), std::move(m));
  return out;
}

/// (x, y) in R^{2n+2}; on T*S^n when <x,x> = 1 and <x,y> = 0.
struct PhasePoint {
  Vector x;
  Vector y;

  Eigen::Index size() const { return x.size(); }

  /// Packs as (x_0..x_n, y_0..y_n).
  Vector packed() const {
    Vector z(2 * x.size());
    z << x, y;
    return z;
  }
  static PhasePoint unpack(const Vector& z) {
    const Eigen::Index d = z.size() / 2;
    return {z.head(d), z.tail(d)};
  }
};

struct ManifoldTolerance {
  double c1 = 1e-9;
  double c2 = 1e-9;
};

struct ConstraintValues {
  double c1;
  double c2;
};

inline ConstraintValues constraint_values(const PhasePoint& p) { return {p.x.squaredNorm(), p.x.dot(p.y)}; }

inline bool on_manifold(const PhasePoint& p, ManifoldTolerance tol = {}) {
  const auto [c1, c2] = constraint_values(p);
  return std::abs(c1 - 1.0) <= tol.c1 && std::abs(c2) <= tol.c2;
}

inline void check_dimension(const SpectrumSpec& spec, const PhasePoint& p) {
  if (p.x.size() != spec.dimension() || p.y.size() != spec.dimension()) {
    std::ostringstream os;
    os << "phase point has dimension (" << p.x.size() << ", " << p.y.size() << "), spectrum needs "
       << spec.dimension();
    throw ConfigError(os.str());
  }
}

inline void require_on_manifold(const PhasePoint& p, ManifoldTolerance tol = {}) {
  const auto [c1, c2] = constraint_values(p);
  if (std::abs(c1 - 1.0) > tol.c1 || std::abs(c2) > tol.c2) {
    std::ostringstream os;
    os.precision(17);
    os << "phase point is off T*S^n: |C1-1| = " << std::abs(c1 - 1.0) << " (tol " << tol.c1 << "), |C2| = "
       << std::abs(c2) << " (tol " << tol.c2 << ")";
    throw PreconditionError(os.str());
  }
}

/// V(x) = 1/2 sum_s b_s |P_s x|^2, evaluated blockwise.
inline double potential(const SpectrumSpec& spec, const Vector& x) {
  double v = 0.0;
  for (int s = 0; s <= spec.ell(); ++s)
    v += spec.b(s) * x.segment(spec.block_begin(s), spec.m(s)).squaredNorm();
  return 0.5 * v;
}

inline Vector potential_gradient(const SpectrumSpec& spec, const Vector& x) {
  Vector g(x.size());
  for (int s = 0; s <= spec.ell(); ++s)
    g.segment(spec.block_begin(s), spec.m(s)) = spec.b(s) * x.segment(spec.block_begin(s), spec.m(s));
  return g;
}

inline double kinetic_energy(const PhasePoint& p) { return 0.5 * p.y.squaredNorm(); }

/// H = 1/2 <y,y> + 1/2 <x, A x>, defined on all of R^{2n+2}.
inline double hamiltonian(const SpectrumSpec& spec, const PhasePoint& p) {
  check_dimension(spec, p);
  return kinetic_energy(p) + potential(spec, p.x);
}

struct PhaseVelocity {
  Vector dx;
  Vector dy;
};

/// Constrained equations of motion on T*S^n for a potential with gradient
/// grad_v at x:  x' = y,  y' = -grad V + (<x, grad V> - 2T) x.
inline PhaseVelocity sphere_vector_field(const Vector& x, const Vector& y, const Vector& grad_v) {
  const double lambda = x.dot(grad_v) - y.squaredNorm();
  return {y, -grad_v + lambda * x};
}

inline PhaseVelocity vector_field(const SpectrumSpec& spec, const PhasePoint& p, ManifoldTolerance tol = {}) {
  check_dimension(spec, p);
  require_on_manifold(p, tol);
  return sphere_vector_field(p.x, p.y, potential_gradient(spec, p.x));
}

/// Same field without the manifold check; the integrator calls this on
/// intermediate stages that are off the sphere by truncation error.
inline PhaseVelocity vector_field_unchecked(const SpectrumSpec& spec, const PhasePoint& p) {
  return sphere_vector_field(p.x, p.y, potential_gradient(spec, p.x));
}

/// Lagrange multiplier of Newton's form x'' = -grad V + lambda x.
inline double lagrange_multiplier(const SpectrumSpec& spec, const PhasePoint& p) {
  return 2.0 * potential(spec, p.x) - 2.0 * kinetic_energy(p);
}

/// Dimension l + l~ + 1 of the regular invariant tori.
inline int torus_dimension(const SpectrumSpec& spec) { return spec.ell() + spec.ell_tilde() + 1; }

/// Projects a point of R^{2n+2} onto T*S^n: normalise x, then remove the normal part of y.
inline PhasePoint project_to_manifold(PhasePoint p) {
  const double r = p.x.norm();
  if (r == 0.0) throw PreconditionError("cannot project x = 0 onto the sphere");
  p.x /= r;
  p.y -= p.x.dot(p.y) * p.x;
  return p;
}

} // namespace neumann
