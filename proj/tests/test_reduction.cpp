#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/SVD>

#include "neumann/reduction.hpp"
#include "test_support.hpp"

using namespace neumann;

namespace {

// Point of T*S^2 with every |xi_s| >= 0.2, away from the inverse-square walls.
PhasePoint reduced_sphere_point(std::mt19937_64& rng) {
  const SpectrumSpec sphere = validate_spectrum({0.0}, {3});
  for (;;) {
    const PhasePoint q = random_phase_point(sphere, rng);
    if (q.x.cwiseAbs().minCoeff() >= 0.2) return q;
  }
}

const double r2 = 1.0 / std::sqrt(2.0);
using K = BlockInvariant::Kind;

double invariant(const SpectrumSpec& s, const PhasePoint& p, BlockInvariant b) {
  const ReducedState st = hilbert_map(s, p);
  switch (b.kind) {
  case K::V: return st.v[b.block];
  case K::T: return st.t[b.block];
  case K::S: return st.s[b.block];
  }
  return 0.0;
}

Observable invariant_observable(const SpectrumSpec& s, BlockInvariant b) {
  return numeric_observable([s, b](const PhasePoint& p) { return invariant(s, p, b); });
}

} // namespace

TEST(HilbertMap, Examples) {
  const SpectrumSpec s = validate_spectrum({0.0, 1.0}, {2, 2});
  ReducedState st = hilbert_map(s, {vec({0, 0, 1, 0}), vec({0, 1, 0, 0})});
  EXPECT_EQ(st.v, vec({0, 0.5}));
  EXPECT_EQ(st.t, vec({0.5, 0}));
  EXPECT_EQ(st.s, vec({0, 0}));
  EXPECT_EQ(st.w, vec({0, 0}));

  st = hilbert_map(s, {vec({r2, 0, r2, 0}), vec({0, 1, 0, -1})});
  EXPECT_NEAR((st.v - vec({0.25, 0.25})).norm(), 0.0, 1e-15);
  EXPECT_NEAR((st.t - vec({0.5, 0.5})).norm(), 0.0, 1e-15);
  EXPECT_EQ(st.s, vec({0, 0}));
  EXPECT_NEAR((st.w - vec({0.5, 0.5})).norm(), 0.0, 1e-15);
}

TEST(HilbertMap, GlobalCasimirsAndSyzygy) {
  const SpectrumSpec s = validate_spectrum({0.0, 1.0, 3.0}, {2, 1, 3});
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const PhasePoint p{gaussian(6, rng), gaussian(6, rng)};
    const ReducedState st = hilbert_map(s, p);
    EXPECT_NEAR(st.c1(), p.x.squaredNorm(), 1e-12);
    EXPECT_NEAR(st.c2(), p.x.dot(p.y), 1e-12);
    EXPECT_EQ(st.w[1], 0.0);
    for (int b = 0; b < 3; ++b) {
      EXPECT_GE(st.w[b], 0.0);
      EXPECT_NEAR(4.0 * st.v[b] * st.t[b] - st.s[b] * st.s[b], st.w[b], 1e-12);
    }
  }
}

TEST(ReducedBracket, TableExample) {
  ReducedState st{vec({0.25, 0.25}), vec({0.3, 0.2}), vec({0.1, -0.1}), vec({0, 0})};
  EXPECT_NEAR(reduced_bracket({K::V, 0}, {K::S, 0}, st), 0.25, 1e-15);
  EXPECT_EQ(reduced_bracket({K::S, 0}, {K::S, 1}, st), 0.0);
  EXPECT_EQ(reduced_bracket({K::V, 0}, {K::V, 1}, st), 0.0);
  ReducedState zero{vec({0, 0}), vec({1, 1}), vec({0, 0}), vec({0, 0})};
  EXPECT_THROW(reduced_bracket({K::V, 0}, {K::T, 0}, zero), PreconditionError);
}

TEST(ReducedBracket, PushForwardOfDiracBracket) {
  const SpectrumSpec s = validate_spectrum({0.0, 1.0, 2.0}, {2, 1, 3});
  std::mt19937_64 rng(2);
  const K kinds[3] = {K::V, K::T, K::S};
  for (int trial = 0; trial < 5; ++trial) {
    const PhasePoint p = random_phase_point(s, rng);
    const ReducedState st = hilbert_map(s, p);
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k)
        for (K a : kinds)
          for (K b : kinds) {
            const double pulled =
                dirac_bracket(invariant_observable(s, {a, i}), invariant_observable(s, {b, k}), p);
            EXPECT_NEAR(reduced_bracket({a, i}, {b, k}, st), pulled, 1e-7);
          }
  }
}

TEST(ReducedBracket, RankAndCasimirs) {
  const SpectrumSpec s = validate_spectrum({0.0, 1.0, 2.0}, {2, 2, 3});
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const ReducedState st = hilbert_map(s, random_phase_point(s, rng));
    const Matrix m = reduced_poisson_matrix(st);
    EXPECT_NEAR((m + m.transpose()).norm(), 0.0, 1e-14);
    const Matrix g = reduced_casimir_gradients(st);
    EXPECT_LT((m * g).norm(), 1e-13);
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
      if (sv[k] > 1e-10 * sv[0]) ++rank;
    EXPECT_EQ(rank, 2 * s.ell());
    // The Casimir gradients span the whole kernel.
    Eigen::JacobiSVD<Matrix> gsvd(g);
    EXPECT_GT(gsvd.singularValues().minCoeff(), 1e-8);
    EXPECT_EQ(g.cols() + rank, m.rows());
  }
}

TEST(RegularCoordinates, Example) {
  const SpectrumSpec s = validate_spectrum({0.0, 1.0}, {2, 2});
  const RegularCoordinates rc = regular_coordinates(s, {vec({r2, 0, r2, 0}), vec({0, 1, 0, -1})});
  EXPECT_NEAR((rc.xi - vec({r2, r2})).norm(), 0.0, 1e-15);
  EXPECT_EQ(rc.eta, vec({0, 0}));
  EXPECT_NEAR((rc.w - vec({0.5, 0.5})).norm(), 0.0, 1e-15);
  EXPECT_NEAR(reduced_hamiltonian(s, rc), 1.25, 1e-14);
}

TEST(RegularCoordinates, RandomPointsAndHilbertRelation) {
  const SpectrumSpec s = validate_spectrum({0.0, 1.0, 2.0}, {2, 1, 3});
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const PhasePoint p = random_phase_point(s, rng);
    const RegularCoordinates rc = regular_coordinates(s, p);
    const ReducedState st = hilbert_map(s, p);
    EXPECT_NEAR(rc.xi.squaredNorm(), 1.0, 1e-13);
    EXPECT_NEAR(rc.xi.dot(rc.eta), 0.0, 1e-13);
    EXPECT_EQ(rc.xi[1], p.x[2]);
    EXPECT_EQ(rc.eta[1], p.y[2]);
    for (int b : {0, 2}) {
      EXPECT_NEAR(rc.xi[b], std::sqrt(2.0 * st.v[b]), 1e-14);
      EXPECT_NEAR(rc.eta[b], st.s[b] / std::sqrt(2.0 * st.v[b]), 1e-12);
    }
    EXPECT_NEAR(reduced_hamiltonian(s, rc), hamiltonian(s, p), 1e-12);
    EXPECT_NEAR(reduced_hamiltonian(s, st), hamiltonian(s, p), 1e-12);
  }
}

TEST(RegularCoordinates, SingularStratumRejected) {
  const SpectrumSpec s = validate_spectrum({0.0, 1.0}, {2, 2});
  // Block 0 has W = 0 (x and y parallel inside it).
  EXPECT_THROW(regular_coordinates(s, {vec({0.6, 0, 0.8, 0}), vec({0.8, 0, -0.6, 0.5})}), PreconditionError);
  // Block 0 has P x = 0.
  EXPECT_THROW(regular_coordinates(s, {vec({0, 0, 1, 0}), vec({0, 1, 0, 0})}), PreconditionError);
  EXPECT_THROW(reduced_hamiltonian(s, vec({0.5, 0.5}), vec({0, 1}), vec({0, 0})), PreconditionError);
}

TEST(ReducedHamiltonian, ZeroCasimirIsPlainNeumann) {
  const SpectrumSpec s = validate_spectrum({0.0, 1.0, 2.0}, {1, 1, 1});
  std::mt19937_64 rng(5);
  const PhasePoint p = random_phase_point(s, rng);
  EXPECT_NEAR(reduced_hamiltonian(s, Vector::Zero(3), p.x, p.y), hamiltonian(s, p), 1e-14);
}

TEST(Rosochatius, InvariantsSatisfySyzygy) {
  const SpectrumSpec s = validate_spectrum({0.0, 1.0, 2.0}, {2, 1, 2});
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const PhasePoint q = reduced_sphere_point(rng);
    const Vector w = vec({std::abs(gaussian(1, rng)[0]), 0.0, std::abs(gaussian(1, rng)[0])});
    const ReducedState st = rosochatius_invariants(s, w, q.x, q.y);
    for (int b = 0; b < 3; ++b) EXPECT_NEAR(4.0 * st.v[b] * st.t[b] - st.s[b] * st.s[b], w[b], 1e-12);
    EXPECT_NEAR(reduced_hamiltonian(s, st), reduced_hamiltonian(s, w, q.x, q.y), 1e-13 * reduced_hamiltonian(s, st));

    // Covering: flipping the sign of an m = 1 coordinate pair leaves (V, T, S) fixed.
    Vector xi = q.x, eta = q.y;
    xi[1] = -xi[1];
    eta[1] = -eta[1];
    const ReducedState flipped = rosochatius_invariants(s, w, xi, eta);
    EXPECT_EQ(flipped.v, st.v);
    EXPECT_EQ(flipped.t, st.t);
    EXPECT_EQ(flipped.s, st.s);
  }
  const ReducedState z = rosochatius_invariants(s, Vector::Zero(3), vec({0.6, 0, 0.8}), vec({0, 1, 0}));
  EXPECT_EQ(z.w, Vector::Zero(3));
  EXPECT_EQ(z.t, vec({0, 0.5, 0}));
}

TEST(Rosochatius, BracketsReproduceTable) {
  const SpectrumSpec s = validate_spectrum({0.0, 1.0, 2.0}, {2, 2, 2});
  std::mt19937_64 rng(7);
  const Vector w = vec({0.3, 0.1, 0.7});
  auto inv = [&](BlockInvariant b) {
    return numeric_observable([&s, w, b](const PhasePoint& q) {
      const ReducedState st = rosochatius_invariants(s, w, q.x, q.y);
      return b.kind == K::V ? st.v[b.block] : b.kind == K::T ? st.t[b.block] : st.s[b.block];
    });
  };
  const K kinds[3] = {K::V, K::T, K::S};
  for (int trial = 0; trial < 3; ++trial) {
    const PhasePoint q = reduced_sphere_point(rng);
    const ReducedState st = rosochatius_invariants(s, w, q.x, q.y);
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k)
        for (K a : kinds)
          for (K b : kinds)
            EXPECT_NEAR(dirac_bracket(inv({a, i}), inv({b, k}), q), reduced_bracket({a, i}, {b, k}, st), 1e-6);
  }
}

TEST(RegularReduction, IsPoissonMap) {
  const SpectrumSpec s = validate_spectrum({0.0, 1.0, 2.0}, {2, 1, 2});
  std::mt19937_64 rng(8);
  const int d = s.block_count();
  for (int trial = 0; trial < 20; ++trial) {
    const PhasePoint p = random_phase_point(s, rng);
    const RegularCoordinates rc = regular_coordinates(s, p);
    const PhasePoint q{rc.xi, rc.eta};
    const int a = static_cast<int>(rng() % (2 * d));
    const int b = static_cast<int>(rng() % (2 * d));
    auto reduced_coord = [](int k, int dim) { return k < dim ? observables::position(k) : observables::momentum(k - dim); };
    auto pulled = [&s, d](int k) {
      return numeric_observable([&s, d, k](const PhasePoint& pt) {
        const RegularCoordinates r = regular_coordinates(s, pt);
        return k < d ? r.xi[k] : r.eta[k - d];
      });
    };
    EXPECT_NEAR(dirac_bracket(pulled(a), pulled(b), p), dirac_bracket(reduced_coord(a, d), reduced_coord(b, d), q),
                1e-8);
  }
}

TEST(Lift, RoundTrip) {
  const SpectrumSpec s = validate_spectrum({0.0, 1.0, 2.0}, {2, 1, 3});
  RegularCoordinates rc{vec({0.6, -0.48, 0.64}), vec({0.2, 0.5, 0.1}), vec({0.3, 0.0, 0.2})};
  const double c2 = rc.xi.dot(rc.eta);
  rc.eta -= c2 * rc.xi;
  const PhasePoint p = lift_to_phase_space(s, rc);
  EXPECT_TRUE(on_manifold(p, {1e-14, 1e-14}));
  const RegularCoordinates back = regular_coordinates(s, p);
  EXPECT_NEAR((back.xi - rc.xi).norm(), 0.0, 1e-15);
  EXPECT_NEAR((back.eta - rc.eta).norm(), 0.0, 1e-15);
  EXPECT_NEAR((back.w - rc.w).norm(), 0.0, 1e-15);
  EXPECT_NEAR(hamiltonian(s, p), reduced_hamiltonian(s, rc), 1e-14);
  rc.w[1] = 0.1;
  EXPECT_THROW(lift_to_phase_space(s, rc), PreconditionError);
}

TEST(ReducedVectorField, PreservesConstraints) {
  const SpectrumSpec s = validate_spectrum({0.0, 1.0, 2.0}, {2, 1, 2});
  std::mt19937_64 rng(9);
  const PhasePoint q = reduced_sphere_point(rng);
  const Vector w = vec({0.2, 0.0, 0.5});
  const PhaseVelocity v = reduced_vector_field(s, w, q.x, q.y);
  EXPECT_NEAR(q.x.dot(v.dx), 0.0, 1e-14);
  EXPECT_NEAR(v.dx.dot(q.y) + q.x.dot(v.dy), 0.0, 1e-13);
  // Equal to the Dirac Hamiltonian field of the reduced Hamiltonian.
  auto h = numeric_observable([&s, w](const PhasePoint& pt) { return reduced_hamiltonian(s, w, pt.x, pt.y); });
  const Vector field = dirac_hamiltonian_field(h.gradient(q), q);
  Vector packed(6);
  packed << v.dx, v.dy;
  EXPECT_NEAR((field - packed).norm(), 0.0, 1e-7);
}
