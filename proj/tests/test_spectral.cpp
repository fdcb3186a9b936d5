#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "neumann/dynamics.hpp"
#include "neumann/spectral.hpp"
#include "test_support.hpp"

using namespace neumann;

namespace {

const SpectrumSpec kPair = validate_spectrum({0.0, 1.0}, {2, 2});
const Vector kQuarter = vec({0.25, 0.25});

// Separation constants of the reduced point (xi, eta).
Vector constants_at(const SpectrumSpec& s, const Vector& w, const Vector& xi, const Vector& eta) {
  const SeparatedState st = to_separated(s, w, xi, eta);
  return separation_constants(s, w, st.u, st.p);
}

// Genus-one state at angle phi on the circle with angular velocity dphi.
Vector circle_point(double phi) { return vec({std::cos(phi), std::sin(phi)}); }
Vector circle_velocity(double phi, double dphi) { return vec({-std::sin(phi) * dphi, std::cos(phi) * dphi}); }

} // namespace

TEST(ComplexRoots, MatchConstructedRoots) {
  const std::vector<double> r{-2.0, 0.5, 3.0};
  auto roots = complex_roots(Polynomial::from_roots(r));
  std::sort(roots.begin(), roots.end(), [](auto a, auto b) { return a.real() < b.real(); });
  for (std::size_t k = 0; k < r.size(); ++k) EXPECT_NEAR(std::abs(roots[k] - r[k]), 0.0, 1e-12);
  EXPECT_NEAR(min_root_distance(roots), 2.5, 1e-12);
}

TEST(BranchPoints, GenusOneInterlacing) {
  const Vector rho = constants_at(kPair, kQuarter, circle_point(0.9), circle_velocity(0.9, 0.3));
  const HyperellipticCurve c = build_polynomials(kPair, kQuarter, rho);
  const BranchPoints bp = branch_points(c);
  ASSERT_EQ(bp.z.size(), 3u);
  EXPECT_LT(bp.z[0], 0.0);
  EXPECT_GT(bp.z[1], 0.0);
  EXPECT_LE(bp.z[1], bp.z[2]);
  EXPECT_LT(bp.z[2], 1.0);
  EXPECT_FALSE(bp.near_discriminant);
  auto ref = complex_roots(c.r);
  std::sort(ref.begin(), ref.end(), [](auto a, auto b) { return a.real() < b.real(); });
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(ref[k].imag(), 0.0, 1e-12);
    EXPECT_NEAR(ref[k].real(), bp.z[k], 1e-12);
  }
}

TEST(BranchPoints, ZeroCasimirsContainEigenvalues) {
  const SpectrumSpec s = validate_spectrum({0.0, 1.0, 2.0}, {1, 1, 1});
  std::mt19937_64 rng(3);
  const RegularCoordinates rc = random_reduced_point(s, rng, 0.5);
  const BranchPoints bp = branch_points(build_polynomials(s, rc.w, constants_at(s, rc.w, rc.xi, rc.eta)));
  for (double b : s.eigenvalues()) {
    double d = 1.0;
    for (double z : bp.z) d = std::min(d, std::abs(z - b));
    EXPECT_LT(d, 1e-12);
  }
}

TEST(BranchPoints, DoubleRootIsFlagged) {
  // A relative equilibrium sits on a double root of its curve.
  const RelativeEquilibrium re = relative_equilibrium(kPair, vec({0.5, 0.5}));
  const Vector rho = constants_at(kPair, kQuarter, re.xi, Vector::Zero(2));
  const HyperellipticCurve c = build_polynomials(kPair, kQuarter, rho);
  EXPECT_LT(min_root_distance(complex_roots(c.r)), 1e-6);
  const auto mid = c.real_roots.size() == 3 ? c.real_roots[1] : re.xi[0] * re.xi[0];
  EXPECT_NEAR(mid, re.xi[0] * re.xi[0], 1e-6);
  if (c.real_roots.size() == 3) {
    EXPECT_TRUE(branch_points(c).near_discriminant);
    EXPECT_NEAR(action_integral(c, 1).value, 0.0, 1e-12);
  }
  // Pushing the energy below the equilibrium loses the real pair.
  Vector lower = rho;
  lower[0] -= 1e-3;
  EXPECT_THROW(branch_points(build_polynomials(kPair, kQuarter, lower)), NumericalError);
}

TEST(Quadrature, ExactForPureSquareRootWeight) {
  for (int n : {2, 3, 8}) {
    const double v = sqrt_weight_rule([](double) { return 1.0; }, -0.3, 1.7, n);
    EXPECT_NEAR(v, M_PI / 2.0, 1e-15);
  }
}

TEST(ActionIntegral, SelfConvergence) {
  const SpectrumSpec s = validate_spectrum({-0.4, 0.3, 1.1, 2.0}, {2, 1, 3, 1});
  std::mt19937_64 rng(4);
  int doubled_seen = 0;
  for (int trial = 0; trial < 10; ++trial) {
    RegularCoordinates rc = random_reduced_point(s, rng, 0.6, 0.2);
    rc.w[0] += 0.01;
    rc.w[2] += 0.01;
    const SeparatedState st = to_separated(s, rc.w, rc.xi, rc.eta);
    const HyperellipticCurve c = build_polynomials(s, rc.w, separation_constants(s, rc.w, st.u, st.p));
    for (int i = 1; i <= 3; ++i) {
      const ActionValue a = action_integral(c, i, st.u[i - 1]);
      const ActionValue doubled = action_integral(c, i, st.u[i - 1], 2 * a.nodes);
      EXPECT_LT(std::abs(doubled.value - a.value), 1e-10 * std::max(1.0, a.value));
      EXPECT_GE(a.value, 0.0);
      // Only eigenvalues without a Casimir can bound a segment.
      for (int e : {a.segment.eigen_at_a, a.segment.eigen_at_b})
        if (e >= 0) {
          EXPECT_EQ(rc.w[e], 0.0);
        }
      doubled_seen += a.gamma == 2;
    }
  }
  EXPECT_GT(doubled_seen, 0);
}

TEST(ActionIntegral, PeriodMatchesTrajectory) {
  const RelativeEquilibrium re = relative_equilibrium(kPair, vec({0.5, 0.5}));
  const double phi_eq = std::atan2(re.xi[1], re.xi[0]);
  for (double amp : {0.05, 0.3}) {
    const Vector xi = circle_point(phi_eq + amp);
    const Vector rho = constants_at(kPair, kQuarter, xi, Vector::Zero(2));
    const PeriodLattice pl = period_lattice(kPair, kQuarter, rho);
    const double predicted = 2.0 * M_PI * pl.t(0, 0);
    const PeriodMeasurement pm = measure_period(kPair, kQuarter, xi, Vector::Zero(2), 0, re.xi[0], 3);
    EXPECT_NEAR(pm.period, predicted, 1e-4 * predicted) << "amplitude " << amp;
  }
}

TEST(ActionIntegral, PendulumTouchesEigenvalue) {
  // m = (1, 1): the planar pendulum H = phi'^2 / 2 + sin^2(phi) / 2, small-oscillation period 2 pi.
  const SpectrumSpec s = validate_spectrum({0.0, 1.0}, {1, 1});
  const Vector w = Vector::Zero(2);
  for (double amp : {0.01, 0.5, 1.2}) {
    const Vector rho = constants_at(s, w, circle_point(amp), Vector::Zero(2));
    const HyperellipticCurve c = build_polynomials(s, w, rho);
    const ActionValue a = action_integral(c, 1);
    EXPECT_EQ(a.gamma, 2);
    EXPECT_EQ(a.segment.eigen_at_b, 1);
    const PeriodLattice pl = period_lattice(s, w, rho);
    // Crossings of x_1 = 0 upward happen once per full swing.
    const PeriodMeasurement pm =
        measure_period(s, w, circle_point(amp), Vector::Zero(2), 1, 0.0, 2, 1e-3, 1e3);
    EXPECT_NEAR(pm.period, 2.0 * M_PI * pl.t(0, 0), 1e-4 * pm.period) << amp;
    if (amp < 0.01) {
      EXPECT_NEAR(2.0 * M_PI * pl.t(0, 0), 2.0 * M_PI, 1e-4);
    }
  }
}

TEST(TrivialAction, ResidueEqualsSquareRootOfCasimir) {
  const Vector rho = constants_at(kPair, kQuarter, circle_point(0.8), circle_velocity(0.8, 0.1));
  const HyperellipticCurve c = build_polynomials(kPair, kQuarter, rho);
  EXPECT_NEAR(trivial_action_residue(c, 0), 0.5, 1e-15);
  EXPECT_NEAR(trivial_action_residue(c, 1), 0.5, 1e-15);
  const HyperellipticCurve bare = build_polynomials(kPair, vec({0.25, 0.0}), rho);
  EXPECT_THROW(trivial_action_residue(bare, 1), PreconditionError);
}

TEST(TrivialAction, AgreesWithMomentumMap) {
  const SpectrumSpec s = validate_spectrum({0.0, 0.8, 1.5}, {3, 1, 2});
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const PhasePoint p = random_phase_point(s, rng);
    const RegularCoordinates rc = regular_coordinates(s, p);
    const HyperellipticCurve c = build_polynomials(s, rc.w, constants_at(s, rc.w, rc.xi, rc.eta));
    for (int b : {0, 2}) EXPECT_NEAR(trivial_action_residue(c, b), std::sqrt(block_casimir(s, p, b)), 1e-12);
  }
}

TEST(PeriodLattice, BlockStructureAndInverse) {
  const SpectrumSpec s = validate_spectrum({0.0, 1.0, 2.0}, {2, 1, 2});
  std::mt19937_64 rng(6);
  RegularCoordinates rc = random_reduced_point(s, rng, 0.5, 0.25);
  rc.w[0] = 0.04;
  rc.w[2] = 0.09;
  const SeparatedState st = to_separated(s, rc.w, rc.xi, rc.eta);
  const Vector rho = separation_constants(s, rc.w, st.u, st.p);
  const PeriodLattice pl = period_lattice(s, rc.w, rho, {st.u[0], st.u[1]});
  ASSERT_EQ(pl.t.rows(), 4);
  EXPECT_EQ(pl.t.bottomLeftCorner(2, 2), Matrix::Zero(2, 2));
  EXPECT_EQ(pl.t.bottomRightCorner(2, 2), Matrix::Identity(2, 2));
  EXPECT_LT((pl.omega * pl.t - Matrix::Identity(4, 4)).norm(), 1e-8);
}

TEST(PeriodLattice, MixedSecondDerivativesCommute) {
  const Vector rho = constants_at(kPair, kQuarter, circle_point(0.9), circle_velocity(0.9, 0.2));
  auto action = [&](double drho, double dj) {
    const double j = 0.5 + dj;
    const Vector w = vec({j * j, 0.25});
    return action_integral(build_polynomials(kPair, w, rho + vec({drho})), 1).value;
  };
  const double h = 1e-3;
  // d/dj of dI/drho against d/drho of dI/dj.
  auto d_rho = [&](double dj) { return (action(h, dj) - action(-h, dj)) / (2.0 * h); };
  auto d_j = [&](double drho) { return (action(drho, h) - action(drho, -h)) / (2.0 * h); };
  const double order1 = (d_rho(h) - d_rho(-h)) / (2.0 * h);
  const double order2 = (d_j(h) - d_j(-h)) / (2.0 * h);
  EXPECT_NEAR(order1, order2, 1e-5);
}

TEST(PeriodLattice, ActionGrowsWithEnergy) {
  const RelativeEquilibrium re = relative_equilibrium(kPair, vec({0.5, 0.5}));
  double prev = -1.0;
  for (double amp : {0.05, 0.1, 0.2, 0.3}) {
    const Vector xi = circle_point(std::atan2(re.xi[1], re.xi[0]) + amp);
    const HyperellipticCurve c = build_polynomials(kPair, kQuarter, constants_at(kPair, kQuarter, xi, Vector::Zero(2)));
    const double i = action_integral(c, 1).value;
    EXPECT_GT(i, prev);
    prev = i;
  }
}

TEST(PeriodLattice, FrequenciesMatchFullTrajectory) {
  // Full phase space, blocks of size 2: the block angle advances at the J frequency on average.
  const Vector xi = circle_point(0.8);
  const Vector eta = circle_velocity(0.8, 0.15);
  const RegularCoordinates rc{xi, eta, kQuarter};
  const Vector rho = constants_at(kPair, kQuarter, xi, eta);
  const PeriodLattice pl = period_lattice(kPair, kQuarter, rho);
  const Vector nu = pl.frequencies();
  const double period = 2.0 * M_PI / nu[0];

  const PhasePoint p0 = lift_to_phase_space(kPair, rc);
  StepControl ctl;
  ctl.dt = 0.01;
  ctl.rtol = 1e-12;
  const int periods = 5;
  const Trajectory tr = integrate(kPair, p0, periods * period, ctl);
  for (int b = 0; b < 2; ++b) {
    double angle = 0.0;
    double last = std::atan2(p0.x[2 * b + 1], p0.x[2 * b]);
    for (const PhasePoint& p : tr.samples) {
      const double now = std::atan2(p.x[2 * b + 1], p.x[2 * b]);
      angle += std::remainder(now - last, 2.0 * M_PI);
      last = now;
    }
    const double measured = angle / (periods * period);
    EXPECT_NEAR(measured, nu[1 + b], 1e-3) << "block " << b;
  }
}
