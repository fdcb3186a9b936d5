#pragma once

// Critical values of the integral map: the discriminant locus of the curve,
// the stratum of relative equilibria, and convexity of the image of the
// energy-Casimir map.
//
// Energies in this module use the convexity convention h = 2 rho_1 - B,
// which is twice the Hamiltonian minus 2B. On the equilibrium stratum
// parametrised by double roots s_k and the simple root r,
//   R(z) = -(z - r) prod (z - s_k)^2,  j_s = sqrt(b_s - r) prod_k (b_s - s_k) / A'(b_s),
// and omega_s^2 = b_s - r = h + b_s + 2 S with S = sum s_k.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "neumann/dynamics.hpp"
#include "neumann/error.hpp"
#include "neumann/model.hpp"
#include "neumann/polynomial.hpp"
#include "neumann/separation.hpp"
#include "neumann/spectral.hpp"

namespace neumann {

/// Runs f(k) for k in [0, n) on up to `workers` threads. Each index is
/// written by exactly one thread, so results do not depend on the split.
template <class F>
void parallel_for(int n, int workers, const F& f) {
  workers = std::clamp(workers, 1, std::max(1, n));
  if (workers == 1) {
    for (int k = 0; k < n; ++k) f(k);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (int k = w; k < n; k += workers) f(k);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Two roots of the curve near z: their distance and how far their midpoint sits from z.
struct DoubleRootCheck {
  double gap = 0.0;
  double offset = 0.0;

  bool holds(double tol = 1e-6) const { return gap < tol && offset < tol; }
};

inline DoubleRootCheck double_root_near(const Polynomial& r, double z) {
  auto roots = complex_roots(r);
  if (roots.size() < 2) throw ConfigError("double_root_near needs a polynomial of degree >= 2");
  std::sort(roots.begin(), roots.end(), [z](auto a, auto b) { return std::abs(a - z) < std::abs(b - z); });
  DoubleRootCheck c;
  c.gap = std::abs(roots[0] - roots[1]);
  c.offset = std::abs(0.5 * (roots[0] + roots[1]) - z);
  // Refine a real cluster: centre at the critical point of r, split from the
  // local quadratic, all evaluated in compensated arithmetic.
  double centre = 0.5 * (roots[0] + roots[1]).real();
  if (std::abs((roots[0] + roots[1]).imag()) > c.gap) return c;
  const Polynomial d1 = r.derivative(), d2 = d1.derivative();
  for (int it = 0; it < 3; ++it) {
    const double curv = d2.evaluate_compensated(centre);
    if (curv == 0.0) return c;
    centre -= d1.evaluate_compensated(centre) / curv;
  }
  const double v = r.evaluate_compensated(centre), s1 = d1.evaluate_compensated(centre);
  const double half = 0.5 * d2.evaluate_compensated(centre);
  const double gap = 2.0 * std::sqrt(std::abs(s1 * s1 - 4.0 * half * v)) / (2.0 * std::abs(half));
  if (gap < c.gap) {
    c.gap = gap;
    c.offset = std::abs(centre - z);
  }
  return c;
}

/// Variants of the explicit genus-two locus formula: the power of w and the
/// form of rho_2. Only one of them puts a double root at z = s.
struct LocusVariant {
  int w_power = 1;
  bool literal_rho2 = false;

  std::string name() const {
    return std::string("w^") + std::to_string(w_power) + (literal_rho2 ? "/literal-rho2" : "/derived-rho2");
  }
};

inline std::vector<LocusVariant> locus_variants() { return {{1, false}, {1, true}, {2, false}, {2, true}}; }

/// (rho_1, rho_2) on the genus-two discriminant locus with a double root at s.
inline Vector locus_l2(const SpectrumSpec& spec, const Vector& w, double s, LocusVariant v = {}) {
  if (spec.ell() != 2) throw ConfigError("locus_l2 needs exactly three eigenvalue blocks");
  detail::require(w.size() == 3, "w must have three entries");
  for (int k = 0; k <= 2; ++k)
    if (s == spec.b(k)) throw PreconditionError("locus_l2: s sits on a pole b_s");
  double rho1 = -s, rho2 = v.literal_rho2 ? s * s : 0.5 * s * s;
  for (int k = 0; k <= 2; ++k) {
    const double wk = v.w_power == 2 ? w[k] * w[k] : w[k];
    const double ad = eigenvalue_derivative(spec, k);
    const double d = s - spec.b(k);
    rho1 += wk * ad / (2.0 * d * d);
    if (v.literal_rho2)
      rho2 += wk * ad / d * (1.0 + spec.b(k) / (2.0 * d));
    else
      rho2 -= wk * ad * (2.0 * s - spec.b(k)) / (2.0 * d * d);
  }
  return Vector{{rho1, rho2}};
}

/// Locus component of a block with w_s = 0: b_s becomes a double root when
/// c_0 + c_1 rho_1 + c_2 rho_2 = 0.
struct LocusLine {
  int block = 0;
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;

  double residual(const Vector& rho) const { return c0 + c1 * rho[0] + c2 * rho[1]; }
};

/// Q(b_s) + sum_{t != s} w_t A'(b_t) / (b_s - b_t) = 0 for each w_s = 0; this
/// reduces to Q(b_s) = 0 when the other Casimirs vanish as well.
inline std::vector<LocusLine> locus_l2_lines(const SpectrumSpec& spec, const Vector& w) {
  if (spec.ell() != 2) throw ConfigError("locus_l2_lines needs exactly three eigenvalue blocks");
  std::vector<LocusLine> out;
  for (int s = 0; s <= 2; ++s) {
    if (w[s] != 0.0) continue;
    const double b = spec.b(s);
    LocusLine line{s, b * b, 2.0 * b, 2.0};
    for (int t = 0; t <= 2; ++t)
      if (t != s) line.c0 += w[t] * eigenvalue_derivative(spec, t) / (b - spec.b(t));
    out.push_back(line);
  }
  return out;
}

struct VariantScore {
  LocusVariant variant;
  double worst_gap = 0.0;
  bool passes = false;
};

struct LocusVariantReport {
  std::vector<VariantScore> scores;
  LocusVariant selected;
};

/// Decides the locus variant with the double-root oracle, sampling s in both
/// chambers for the given w and for a probe w whose entries differ from their squares.
inline LocusVariantReport select_locus_variant(const SpectrumSpec& spec, const Vector& w) {
  if (spec.ell() != 2) throw ConfigError("select_locus_variant needs exactly three eigenvalue blocks");
  std::vector<Vector> ws{w, Vector{{0.09, 0.16, 0.25}}};
  LocusVariantReport rep;
  for (const LocusVariant& v : locus_variants()) {
    VariantScore sc{v, 0.0, true};
    for (const Vector& ww : ws)
      for (int chamber = 1; chamber <= 2; ++chamber)
        for (double f : {0.2, 0.5, 0.8}) {
          const double s = spec.b(chamber - 1) + f * (spec.b(chamber) - spec.b(chamber - 1));
          const HyperellipticCurve c = build_polynomials(spec, ww, locus_l2(spec, ww, s, v));
          const DoubleRootCheck d = double_root_near(c.r, s);
          sc.worst_gap = std::max(sc.worst_gap, std::max(d.gap, d.offset));
        }
    sc.passes = sc.worst_gap < 1e-6;
    rep.scores.push_back(sc);
  }
  auto best = std::min_element(rep.scores.begin(), rep.scores.end(),
                               [](const VariantScore& a, const VariantScore& b) { return a.worst_gap < b.worst_gap; });
  if (!best->passes) throw NumericalError("no locus variant produces a double root at s");
  rep.selected = best->variant;
  return rep;
}

/// Convergence-free threshold h* = -2 (B - b_l) - b_0 above which the image is convex.
inline double convexity_threshold(const SpectrumSpec& spec) {
  return -2.0 * (spec.eigenvalue_sum() - spec.b(spec.ell())) - spec.b(0);
}

/// Point of the corank-l stratum: every separated pair collapsed.
struct StratumPoint {
  Vector s;
  double r = 0.0;
  Vector j;
  Vector omega;
  Vector rho;
  double h = 0.0;       // 2 rho_1 - B
  double energy = 0.0;  // value of the Hamiltonian, rho_1 + B / 2
};

inline StratumPoint equilibrium_stratum(const SpectrumSpec& spec, const Vector& s, double r) {
  const int l = spec.ell();
  if (s.size() != l) throw ConfigError("equilibrium_stratum: need l double roots");
  for (int k = 1; k <= l; ++k)
    if (!(s[k - 1] > spec.b(k - 1) && s[k - 1] < spec.b(k)))
      throw PreconditionError("equilibrium_stratum: double roots must interlace, b_k-1 < s_k < b_k");
  StratumPoint p;
  p.s = s;
  p.r = r;
  p.j = Vector(l + 1);
  p.omega = Vector(l + 1);
  for (int b = 0; b <= l; ++b) {
    const double om2 = spec.b(b) - r;
    if (om2 < 0.0) {
      std::ostringstream os;
      os.precision(17);
      os << "equilibrium_stratum: b_" << b << " - r = " << om2 << " < 0, no real momentum";
      throw PreconditionError(os.str());
    }
    double prod = 1.0;
    for (int k = 0; k < l; ++k) prod *= spec.b(b) - s[k];
    p.omega[b] = std::sqrt(om2);
    p.j[b] = p.omega[b] * prod / eigenvalue_derivative(spec, b);
  }
  // Q = ((z - r) prod (z - s_k)^2 + Qt) / A, exactly divisible.
  const std::vector<double> sv(s.data(), s.data() + l);
  const Polynomial ps = Polynomial::from_roots(sv);
  const Polynomial target = Polynomial{-r, 1.0} * ps * ps;
  const Polynomial qt = casimir_polynomial(spec, p.j.array().square().matrix());
  const auto [q, rem] = divide(target + qt, eigenvalue_polynomial(spec));
  if (rem.coefficient_scale() > 1e-8 * (1.0 + target.coefficient_scale()))
    throw NumericalError("equilibrium_stratum: the curve does not factor as expected");
  p.rho = Vector(l);
  for (int k = 1; k <= l; ++k) p.rho[k - 1] = 0.5 * q.coefficient(l - k);
  p.h = 2.0 * p.rho[0] - spec.eigenvalue_sum();
  p.energy = energy_from_constants(spec, p.rho);
  return p;
}

/// The stratum point with double roots s at energy h: r = -h - 2 S.
inline StratumPoint equilibrium_stratum_at_energy(const SpectrumSpec& spec, double h, const Vector& s) {
  return equilibrium_stratum(spec, s, -h - 2.0 * s.sum());
}

/// j_s = omega_s (b_s^l + b_s^(l-1) t_1 + ... + t_l) / A'(b_s), omega_s^2 = h + b_s - 2 t_1,
/// where prod (z - s_k) = z^l + t_1 z^(l-1) + ... + t_l.
inline Vector stratum_from_symmetric(const SpectrumSpec& spec, double h, const Vector& t) {
  const int l = spec.ell();
  if (t.size() != l) throw ConfigError("stratum_from_symmetric: need l symmetric functions");
  Vector j(l + 1);
  for (int b = 0; b <= l; ++b) {
    const double om2 = h + spec.b(b) - 2.0 * t[0];
    if (om2 < 0.0) throw PreconditionError("stratum_from_symmetric: omega^2 < 0");
    double poly = 1.0;
    for (int k = 0; k < l; ++k) poly = poly * spec.b(b) + t[k];
    j[b] = std::sqrt(om2) * poly / eigenvalue_derivative(spec, b);
  }
  return j;
}

/// Signed symmetric functions t_k of the roots s.
inline Vector symmetric_functions(const Vector& s) {
  const int l = static_cast<int>(s.size());
  const Polynomial p = Polynomial::from_roots(std::vector<double>(s.data(), s.data() + l));
  Vector t(l);
  for (int k = 1; k <= l; ++k) t[k - 1] = p.coefficient(l - k);
  return t;
}

/// P in both forms: prod (h + s_k + 2 S) and sum_tau (h - 2 t_1)^(l - tau) (-1)^tau t_tau.
inline std::pair<double, double> convexity_p(double h, const Vector& s) {
  const int l = static_cast<int>(s.size());
  const double sum = s.sum();
  double from_roots = 1.0;
  for (int k = 0; k < l; ++k) from_roots *= h + s[k] + 2.0 * sum;
  const Vector t = symmetric_functions(s);
  double from_t = 0.0;
  for (int tau = 0; tau <= l; ++tau) {
    const double tt = tau == 0 ? 1.0 : t[tau - 1];
    from_t += std::pow(h - 2.0 * t[0], l - tau) * ((tau % 2) ? -1.0 : 1.0) * tt;
  }
  return {from_roots, from_t};
}

/// Chamber sample: s_k uniform in (b_k-1, b_k) shrunk by 1% margins.
inline Vector sample_chamber(const SpectrumSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.01, 0.99);
  Vector s(spec.ell());
  for (int k = 1; k <= spec.ell(); ++k) s[k - 1] = spec.b(k - 1) + unit(rng) * (spec.b(k) - spec.b(k - 1));
  return s;
}

struct BoundarySample {
  Vector s;
  Vector j;
  Vector omega;
  double p_roots = 0.0;
  double p_symmetric = 0.0;
  double o = 0.0;
  double gradient_error = 0.0;     // |dh/dj - 2 omega| by central differences, relative
  double hessian_mismatch = 0.0;   // 2 O / P against 2 / sum j / omega^3, relative
  double second_eigenvalue = 0.0;  // |lambda_2| / |lambda_1|
  double eigenvector_error = 0.0;  // distance of the top eigenvector from 1 / omega (normalised)
  double energy_mismatch = 0.0;    // |h + 2B - h_relative_equilibrium(j)|
};

struct BoundaryReport {
  double h = 0.0;
  double threshold = 0.0;
  bool threshold_met = false;
  std::vector<BoundarySample> samples;
  int pairs = 0;
  double worst_midpoint_excess = -std::numeric_limits<double>::infinity();
  bool midpoint_convex = true;

  bool p_positive() const {
    return std::all_of(samples.begin(), samples.end(), [](const BoundarySample& b) { return b.p_roots > 0.0; });
  }
};

/// Samples the boundary of the energy-Casimir image at energy h and checks
/// gradient, Hessian and midpoint convexity. Below the threshold the report
/// carries threshold_met = false and no samples.
inline BoundaryReport convexity_check(const SpectrumSpec& spec, double h, int samples, int pairs,
                                      std::uint64_t seed = 1, int workers = 1) {
  for (int b = 0; b <= spec.ell(); ++b)
    if (spec.m(b) < 2) throw PreconditionError("convexity_check: every block needs m >= 2 to carry a momentum");
  if (samples < 2 || pairs < 0) throw ConfigError("convexity_check: need at least two samples");
  BoundaryReport rep;
  rep.h = h;
  rep.threshold = convexity_threshold(spec);
  rep.threshold_met = h > rep.threshold;
  if (!rep.threshold_met) return rep;

  const double two_b = 2.0 * spec.eigenvalue_sum();
  std::mt19937_64 rng(seed);
  std::vector<Vector> chamber;
  for (int k = 0; k < samples; ++k) chamber.push_back(sample_chamber(spec, rng));
  std::uniform_int_distribution<int> pick(0, samples - 1);
  std::vector<std::pair<int, int>> pair_index;
  for (int k = 0; k < pairs; ++k) pair_index.emplace_back(pick(rng), pick(rng));

  rep.samples.resize(static_cast<std::size_t>(samples));
  parallel_for(samples, workers, [&](int k) {
    BoundarySample& bs = rep.samples[static_cast<std::size_t>(k)];
    const StratumPoint p = equilibrium_stratum_at_energy(spec, h, chamber[static_cast<std::size_t>(k)]);
    bs.s = p.s;
    bs.j = p.j;
    bs.omega = p.omega;
    std::tie(bs.p_roots, bs.p_symmetric) = convexity_p(h, p.s);
    bs.o = p.omega.array().square().prod();

    const RelativeEquilibrium re = relative_equilibrium(spec, p.j);
    bs.energy_mismatch = std::abs(h + two_b - re.h);
    for (int b = 0; b <= spec.ell(); ++b) {
      const double d = 1e-6 * p.j[b];
      Vector jp = p.j, jm = p.j;
      jp[b] += d;
      jm[b] -= d;
      const double g = (relative_equilibrium(spec, jp).h - relative_equilibrium(spec, jm).h) / (2.0 * d);
      bs.gradient_error = std::max(bs.gradient_error, std::abs(g - 2.0 * p.omega[b]) / (2.0 * p.omega[b]));
    }
    const double coef = 2.0 * bs.o / bs.p_roots;
    double q = 0.0;
    for (int b = 0; b <= spec.ell(); ++b) q += p.j[b] / std::pow(p.omega[b], 3);
    bs.hessian_mismatch = std::abs(coef - 2.0 / q) / coef;
    const Vector v = p.omega.cwiseInverse();
    const Matrix hess = coef * v * v.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(hess);
    const Vector ev = es.eigenvalues();
    const double top = ev.cwiseAbs().maxCoeff();
    bs.second_eigenvalue = (ev.size() > 1 ? std::abs(ev[ev.size() - 2]) : 0.0) / top;
    Vector u = es.eigenvectors().col(ev.size() - 1);
    if (u.dot(v) < 0.0) u = -u;
    bs.eigenvector_error = (u - v.normalized()).norm();
  });

  std::vector<double> excess(pair_index.size());
  parallel_for(static_cast<int>(pair_index.size()), workers, [&](int k) {
    const auto [a, b] = pair_index[static_cast<std::size_t>(k)];
    const Vector mid = 0.5 * (rep.samples[static_cast<std::size_t>(a)].j + rep.samples[static_cast<std::size_t>(b)].j);
    excess[static_cast<std::size_t>(k)] = relative_equilibrium(spec, mid).h - two_b - h;
  });
  rep.pairs = pairs;
  for (double e : excess) {
    rep.worst_midpoint_excess = std::max(rep.worst_midpoint_excess, e);
    if (e > 1e-9) rep.midpoint_convex = false;
  }
  return rep;
}

struct PolyhedronRow {
  double h = 0.0;
  double rescaled_deviation = 0.0;  // max |j / sqrt(h) - j_model|
  double absolute_deviation = 0.0;  // max |j - sqrt(h) j_model|
};

/// Distance of the rescaled boundary from the omega = 1 model
/// j_s = prod_k (b_s - s_k) / A'(b_s), over a fixed grid of chamber points.
inline std::vector<PolyhedronRow> polyhedron_limit(const SpectrumSpec& spec, const std::vector<double>& hs,
                                                   int samples, std::uint64_t seed = 1) {
  const double hstar = convexity_threshold(spec);
  for (std::size_t k = 0; k < hs.size(); ++k) {
    if (!(hs[k] > hstar)) throw PreconditionError("polyhedron_limit: energies must exceed the convexity threshold");
    if (k > 0 && !(hs[k] > hs[k - 1])) throw ConfigError("polyhedron_limit: energies must increase");
  }
  std::mt19937_64 rng(seed);
  std::vector<Vector> chamber;
  for (int k = 0; k < samples; ++k) chamber.push_back(sample_chamber(spec, rng));
  std::vector<PolyhedronRow> rows;
  for (double h : hs) {
    PolyhedronRow row{h, 0.0, 0.0};
    for (const Vector& s : chamber) {
      const StratumPoint p = equilibrium_stratum_at_energy(spec, h, s);
      for (int b = 0; b <= spec.ell(); ++b) {
        double model = 1.0;
        for (int k = 0; k < spec.ell(); ++k) model *= spec.b(b) - s[k];
        model /= eigenvalue_derivative(spec, b);
        row.rescaled_deviation = std::max(row.rescaled_deviation, std::abs(p.j[b] / std::sqrt(h) - model));
        row.absolute_deviation = std::max(row.absolute_deviation, std::abs(p.j[b] - std::sqrt(h) * model));
      }
    }
    rows.push_back(row);
  }
  return rows;
}

/// Largest second difference of j along t_l at fixed (h, t_1..t_l-1); zero
/// for a boundary that is ruled along that direction.
inline double ruling_second_difference(const SpectrumSpec& spec, double h, const Vector& t, double step) {
  const int l = spec.ell();
  Vector tp = t, tm = t;
  tp[l - 1] += step;
  tm[l - 1] -= step;
  const Vector d2 = stratum_from_symmetric(spec, h, tp) - 2.0 * stratum_from_symmetric(spec, h, t) +
                    stratum_from_symmetric(spec, h, tm);
  return d2.cwiseAbs().maxCoeff();
}

struct InteriorScan {
  int sampled = 0;
  int bounded = 0;
  double smallest_gap = std::numeric_limits<double>::infinity();
  int double_roots = 0;  // curves with a gap below 1e-6
};

/// Curves of random regular reduced points with the given Casimirs: for all
/// w_s > 0 none of them should have a double root.
inline InteriorScan interior_scan(const SpectrumSpec& spec, const Vector& w, int samples, std::uint64_t seed = 1,
                                  int workers = 1) {
  const int nb = spec.block_count();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::vector<std::pair<Vector, Vector>> points;
  while (static_cast<int>(points.size()) < samples) {
    Vector xi(nb), eta(nb);
    for (int k = 0; k < nb; ++k) xi[k] = gauss(rng);
    for (int k = 0; k < nb; ++k) eta[k] = gauss(rng);
    xi.normalize();
    if (xi.cwiseAbs().minCoeff() < 1e-3) continue;
    eta -= xi.dot(eta) * xi;
    points.emplace_back(xi, eta);
  }
  std::vector<double> gaps(static_cast<std::size_t>(samples));
  std::vector<int> bounded(static_cast<std::size_t>(samples));
  parallel_for(samples, workers, [&](int k) {
    const auto& [xi, eta] = points[static_cast<std::size_t>(k)];
    const SeparatedState st = to_separated(spec, w, xi, eta);
    const HyperellipticCurve c = build_polynomials(spec, w, separation_constants(spec, w, st.u, st.p));
    bounded[static_cast<std::size_t>(k)] = static_cast<int>(c.real_roots.size()) == 2 * spec.ell() + 1;
    gaps[static_cast<std::size_t>(k)] = min_root_distance(complex_roots(c.r));
  });
  InteriorScan scan;
  scan.sampled = samples;
  for (int k = 0; k < samples; ++k) {
    scan.bounded += bounded[static_cast<std::size_t>(k)];
    scan.smallest_gap = std::min(scan.smallest_gap, gaps[static_cast<std::size_t>(k)]);
    scan.double_roots += gaps[static_cast<std::size_t>(k)] < 1e-6;
  }
  return scan;
}

} // namespace neumann
