#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "neumann/model.hpp"
#include "test_support.hpp"

using namespace neumann;

TEST(Spectrum, BookkeepingTwoBlocks) {
  const SpectrumSpec s = validate_spectrum({0.0, 1.0}, {2, 2});
  EXPECT_EQ(s.n(), 3);
  EXPECT_EQ(s.ell(), 1);
  EXPECT_EQ(s.ell_tilde(), 1);
  EXPECT_EQ(s.block_begin(0), 0);
  EXPECT_EQ(s.block_end(0), 2);
  EXPECT_EQ(s.block_begin(1), 2);
  EXPECT_EQ(s.block_end(1), 4);
  EXPECT_EQ(s.block_of(3), 1);
  EXPECT_DOUBLE_EQ(s.coefficient(1), 0.0);
  EXPECT_DOUBLE_EQ(s.coefficient(2), 1.0);
}

TEST(Spectrum, BookkeepingMixedMultiplicities) {
  const SpectrumSpec s = validate_spectrum({0.0, 1.0, 2.0}, {2, 1, 2});
  EXPECT_EQ(s.n(), 4);
  EXPECT_EQ(s.ell(), 2);
  EXPECT_EQ(s.ell_tilde(), 1);
}

TEST(Spectrum, Rejections) {
  EXPECT_THROW(validate_spectrum({1.0, 0.0}, {1, 1}), ConfigError);
  EXPECT_THROW(validate_spectrum({0.0, 0.0}, {1, 1}), ConfigError);
  EXPECT_THROW(validate_spectrum({0.0, 1.0}, {1, 0}), ConfigError);
  EXPECT_THROW(validate_spectrum({}, {}), ConfigError);
  EXPECT_THROW(validate_spectrum({0.0, 1.0}, {1}), ConfigError);
}

TEST(Spectrum, CanonicalOrderingGroupsEqualCoefficients) {
  const CanonicalOrdering c = canonicalize({2.0, 0.0, 2.0, 1.0, 0.0});
  EXPECT_EQ(c.spec.eigenvalues(), (std::vector<double>{0.0, 1.0, 2.0}));
  EXPECT_EQ(c.spec.multiplicities(), (std::vector<int>{2, 1, 2}));
  Vector user(5);
  user << 10, 11, 12, 13, 14;
  const Vector can = c.to_canonical(user);
  Vector expected(5);
  expected << 11, 14, 13, 10, 12;
  EXPECT_EQ(can, expected);
  EXPECT_EQ(c.to_user(can), user);
}

TEST(Hamiltonian, Examples) {
  const SpectrumSpec s = validate_spectrum({0.0, 1.0}, {2, 2});
  EXPECT_DOUBLE_EQ(hamiltonian(s, {vec({1, 0, 0, 0}), vec({0, 0, 0, 0})}), 0.0);
  EXPECT_DOUBLE_EQ(hamiltonian(s, {vec({0, 0, 1, 0}), vec({0, 1, 0, 0})}), 1.0);
  const double r = 1.0 / std::sqrt(2.0);
  // T = 1/2 * 2 = 1, V = 1/2 * 1 * 1/2 = 1/4
  EXPECT_NEAR(hamiltonian(s, {vec({r, 0, r, 0}), vec({0, 1, 0, -1})}), 1.25, 1e-15);
}

TEST(Hamiltonian, BlockRotationInvariance) {
  const SpectrumSpec s = validate_spectrum({-0.5, 0.3, 2.0}, {3, 1, 2});
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const PhasePoint p = random_phase_point(s, rng);
    const Matrix g = random_block_rotation(s, rng);
    const PhasePoint q{g * p.x, g * p.y};
    EXPECT_NEAR(hamiltonian(s, q), hamiltonian(s, p), 1e-13);
  }
}

TEST(VectorField, Equilibrium) {
  const SpectrumSpec s = validate_spectrum({0.0, 1.0}, {2, 2});
  const PhaseVelocity v = vector_field(s, {vec({1, 0, 0, 0}), vec({0, 0, 0, 0})});
  EXPECT_EQ(v.dx.norm(), 0.0);
  EXPECT_EQ(v.dy.norm(), 0.0);
}

TEST(VectorField, HandEvaluation) {
  const SpectrumSpec s = validate_spectrum({0.0, 1.0}, {2, 2});
  const PhaseVelocity v = vector_field(s, {vec({0, 0, 1, 0}), vec({0, 1, 0, 0})});
  EXPECT_EQ(v.dx, vec({0, 1, 0, 0}));
  // grad V = e_2, <x, grad V> = 1 = 2T, so y' = -grad V.
  EXPECT_NEAR((v.dy - vec({0, 0, -1, 0})).norm(), 0.0, 1e-15);
}

TEST(VectorField, GeodesicCaseHasOnlyCentralForce) {
  const SpectrumSpec s = validate_spectrum({0.7}, {4});
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const PhasePoint p = random_phase_point(s, rng);
    const PhaseVelocity v = vector_field(s, p);
    EXPECT_NEAR((v.dy + 2.0 * kinetic_energy(p) * p.x).norm(), 0.0, 1e-13);
  }
}

TEST(VectorField, RejectsOffManifold) {
  const SpectrumSpec s = validate_spectrum({0.0, 1.0}, {2, 2});
  EXPECT_THROW(vector_field(s, {vec({2, 0, 0, 0}), vec({0, 0, 0, 0})}), PreconditionError);
  EXPECT_THROW(vector_field(s, {vec({1, 0, 0}), vec({0, 0, 0})}), ConfigError);
}

TEST(VectorField, ConstraintDerivatives) {
  const SpectrumSpec s = validate_spectrum({0.0, 1.0, 2.5}, {2, 1, 2});
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const PhasePoint p = random_phase_point(s, rng);
    const PhaseVelocity v = vector_field(s, p);
    // d/dt C1 = 2 <x, y> and d/dt C2 = |y|^2 + <x, y'>
    EXPECT_NEAR(2.0 * p.x.dot(v.dx), 2.0 * p.x.dot(p.y), 1e-14);
    EXPECT_NEAR(v.dx.dot(p.y) + p.x.dot(v.dy), 0.0, 1e-13);
  }
}

TEST(VectorField, MatchesNewtonForm) {
  const SpectrumSpec s = validate_spectrum({0.0, 1.0, 2.5}, {2, 1, 2});
  std::mt19937_64 rng(12);
  const PhasePoint p = random_phase_point(s, rng);
  const PhaseVelocity v = vector_field(s, p);
  const Vector newton = -potential_gradient(s, p.x) + lagrange_multiplier(s, p) * p.x;
  EXPECT_NEAR((v.dy - newton).norm(), 0.0, 1e-13);
}

TEST(Constraints, Examples) {
  auto c = constraint_values({vec({1, 0}), vec({0, 0})});
  EXPECT_EQ(c.c1, 1.0);
  EXPECT_EQ(c.c2, 0.0);
  const double r = 1.0 / std::sqrt(2.0);
  c = constraint_values({vec({r, 0, r, 0}), vec({0, 1, 0, -1})});
  EXPECT_NEAR(c.c1, 1.0, 1e-15);
  EXPECT_EQ(c.c2, 0.0);
  c = constraint_values({vec({2, 0}), vec({1, 0})});
  EXPECT_EQ(c.c1, 4.0);
  EXPECT_EQ(c.c2, 2.0);
}

TEST(TorusDimension, Examples) {
  EXPECT_EQ(torus_dimension(validate_spectrum({0.0, 1.0}, {2, 2})), 3);
  // No block with m >= 2: the tori are Lagrangian, of dimension n = 2.
  const SpectrumSpec generic = validate_spectrum({0.0, 1.0, 2.0}, {1, 1, 1});
  EXPECT_EQ(torus_dimension(generic), generic.n());
  EXPECT_EQ(torus_dimension(generic), 2);
  EXPECT_EQ(torus_dimension(validate_spectrum({0.0}, {3})), 1);
}

TEST(Projection, LandsOnManifold) {
  PhasePoint p{vec({3, 1, -2}), vec({1, 1, 1})};
  p = project_to_manifold(p);
  EXPECT_TRUE(on_manifold(p, {1e-15, 1e-15}));
  EXPECT_THROW(project_to_manifold({vec({0, 0}), vec({1, 0})}), PreconditionError);
}
