#pragma once

// Real polynomials with compensated arithmetic and real-root isolation.

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "neumann/error.hpp"

namespace neumann {

namespace detail {

// Error-free transformations.
inline std::pair<double, double> two_sum(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  return {s, (a - (s - bb)) + (b - bb)};
}

inline std::pair<double, double> two_product(double a, double b) {
  const double p = a * b;
  return {p, std::fma(a, b, -p)};
}

/// Neumaier-compensated accumulator.
class CompensatedSum {
public:
  void add(double v) {
    auto [s, e] = two_sum(sum_, v);
    sum_ = s;
    err_ += e;
  }
  void add_product(double a, double b) {
    auto [p, e] = two_product(a, b);
    add(p);
    err_ += e;
  }
  double value() const { return sum_ + err_; }

private:
  double sum_ = 0.0;
  double err_ = 0.0;
};

} // namespace detail

class Polynomial {
public:
  Polynomial() = default;
  /// Coefficients in ascending order, c[k] multiplies z^k.
  explicit Polynomial(std::vector<double> ascending) : c_(std::move(ascending)) { trim(); }
  Polynomial(std::initializer_list<double> ascending) : c_(ascending) { trim(); }

  static Polynomial from_descending(std::span<const double> desc) {
    return Polynomial(std::vector<double>(desc.rbegin(), desc.rend()));
  }

  static Polynomial constant(double v) { return Polynomial(std::vector<double>{v}); }

  /// prod_k (z - r_k)
  static Polynomial from_roots(std::span<const double> roots) {
    Polynomial p = constant(1.0);
    for (double r : roots) p = p * Polynomial{-r, 1.0};
    return p;
  }

  int degree() const { return static_cast<int>(c_.size()) - 1; }
  bool is_zero() const { return c_.size() == 1 && c_[0] == 0.0; }
  double coefficient(int k) const {
    return (k >= 0 && k < static_cast<int>(c_.size())) ? c_[static_cast<std::size_t>(k)] : 0.0;
  }
  double leading() const { return c_.back(); }
  const std::vector<double>& ascending() const { return c_; }
  std::vector<double> descending() const { return {c_.rbegin(), c_.rend()}; }

  double operator()(double z) const {
    double v = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) v = v * z + *it;
    return v;
  }

  /// Compensated Horner: as accurate as Horner in twice the working precision.
  double evaluate_compensated(double z) const {
    double s = c_.back();
    double err = 0.0;
    for (int k = degree() - 1; k >= 0; --k) {
      auto [p, pe] = detail::two_product(s, z);
      auto [t, se] = detail::two_sum(p, c_[static_cast<std::size_t>(k)]);
      s = t;
      err = err * z + (pe + se);
    }
    return s + err;
  }

  /// sum |c_k| |z|^k; coefficient rounding moves p(z) by about eps times this.
  double absolute_scale(double z) const {
    double a = 0.0;
    const double az = std::abs(z);
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) a = a * az + std::abs(*it);
    return a;
  }

  Polynomial derivative() const {
    if (degree() == 0) return constant(0.0);
    std::vector<double> d(c_.size() - 1);
    for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
    return Polynomial(std::move(d));
  }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    std::vector<double> r(std::max(a.c_.size(), b.c_.size()), 0.0);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = a.coefficient(static_cast<int>(k)) + b.coefficient(static_cast<int>(k));
    return Polynomial(std::move(r));
  }
  friend Polynomial operator-(const Polynomial& a) {
    std::vector<double> r = a.c_;
    for (double& v : r) v = -v;
    return Polynomial(std::move(r));
  }
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-b); }
  friend Polynomial operator*(double s, const Polynomial& a) {
    std::vector<double> r = a.c_;
    for (double& v : r) v *= s;
    return Polynomial(std::move(r));
  }
  /// Convolution of coefficient lists with compensated accumulation.
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    const std::size_t n = a.c_.size() + b.c_.size() - 1;
    std::vector<double> r(n);
    for (std::size_t k = 0; k < n; ++k) {
      detail::CompensatedSum acc;
      const std::size_t lo = k >= b.c_.size() ? k - b.c_.size() + 1 : 0;
      const std::size_t hi = std::min(k, a.c_.size() - 1);
      for (std::size_t i = lo; i <= hi; ++i) acc.add_product(a.c_[i], b.c_[k - i]);
      r[k] = acc.value();
    }
    return Polynomial(std::move(r));
  }

  /// Long division a = q b + r with deg r < deg b.
  friend std::pair<Polynomial, Polynomial> divide(const Polynomial& a, const Polynomial& b) {
    if (b.is_zero()) throw NumericalError("polynomial division by zero");
    if (a.degree() < b.degree()) return {constant(0.0), a};
    std::vector<double> rem = a.c_;
    std::vector<double> q(static_cast<std::size_t>(a.degree() - b.degree() + 1), 0.0);
    for (int k = a.degree() - b.degree(); k >= 0; --k) {
      const double f = rem[static_cast<std::size_t>(k + b.degree())] / b.leading();
      q[static_cast<std::size_t>(k)] = f;
      for (int i = 0; i <= b.degree(); ++i) rem[static_cast<std::size_t>(k + i)] -= f * b.c_[static_cast<std::size_t>(i)];
    }
    rem.resize(static_cast<std::size_t>(std::max(b.degree(), 1)));
    return {Polynomial(std::move(q)), Polynomial(std::move(rem))};
  }

  /// Magnitude scale sum |c_k|, used to turn absolute tolerances into relative ones.
  double coefficient_scale() const {
    double s = 0.0;
    for (double v : c_) s += std::abs(v);
    return s;
  }

private:
  void trim() {
    if (c_.empty()) c_.push_back(0.0);
    while (c_.size() > 1 && c_.back() == 0.0) c_.pop_back();
  }

  std::vector<double> c_{0.0};
};

namespace detail {

inline int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

// Root of a polynomial that is monotone on [lo, hi] with a sign change;
// bisection safeguarding Newton steps.
inline double refine_bracketed_root(const Polynomial& p, const Polynomial& dp, double lo, double hi) {
  double flo = p.evaluate_compensated(lo);
  if (flo == 0.0) return lo;
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    const double fx = p.evaluate_compensated(x);
    if (fx == 0.0) return x;
    if (sign_of(fx) == sign_of(flo)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
    }
    const double width = hi - lo;
    if (width <= 4.0 * std::numeric_limits<double>::epsilon() * std::max({std::abs(lo), std::abs(hi), 1e-300}))
      break;
    const double d = dp(x);
    double next = (d != 0.0) ? x - fx / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    // Fall back to bisection if Newton stalls near the bracket ends.
    if (it % 8 == 7) next = 0.5 * (lo + hi);
    if (next == x) break;
    x = next;
  }
  return x;
}

} // namespace detail

/// All real roots in ascending order. A critical point where the value is
/// zero within the evaluation error is reported twice (a double root).
inline std::vector<double> real_roots(const Polynomial& p) {
  const int d = p.degree();
  if (d <= 0) return {};
  if (d == 1) return {-p.coefficient(0) / p.coefficient(1)};

  double bound = 0.0;
  for (int k = 0; k < d; ++k) bound = std::max(bound, std::abs(p.coefficient(k) / p.leading()));
  bound = 1.0 + bound;

  const Polynomial dp = p.derivative();
  std::vector<double> crit;
  for (double c : real_roots(dp))
    if (c > -bound && c < bound && (crit.empty() || c > crit.back())) crit.push_back(c);

  std::vector<double> pts;
  pts.push_back(-bound);
  pts.insert(pts.end(), crit.begin(), crit.end());
  pts.push_back(bound);

  std::vector<double> vals(pts.size());
  std::vector<bool> touching(pts.size(), false);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    vals[k] = p.evaluate_compensated(pts[k]);
    const bool interior = k > 0 && k + 1 < pts.size();
    if (interior && std::abs(vals[k]) <= 16.0 * std::numeric_limits<double>::epsilon() * p.absolute_scale(pts[k]))
      touching[k] = true;
  }

  std::vector<double> roots;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    if (touching[k]) {
      roots.push_back(pts[k]);
      roots.push_back(pts[k]);
    }
    if (touching[k] || touching[k + 1]) continue;
    if (detail::sign_of(vals[k]) * detail::sign_of(vals[k + 1]) < 0)
      roots.push_back(detail::refine_bracketed_root(p, dp, pts[k], pts[k + 1]));
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

/// Smallest gap between consecutive sorted values; +inf for fewer than two.
inline double min_gap(const std::vector<double>& sorted) {
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < sorted.size(); ++k) g = std::min(g, sorted[k] - sorted[k - 1]);
  return g;
}

} // namespace neumann
