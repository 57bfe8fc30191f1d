#include <gtest/gtest.h>

#include "fieldtn/errors.hpp"
#include "fieldtn/propagator.hpp"
#include "support.hpp"

using namespace fieldtn;
using fieldtn::testing::rel_diff;
using MF = MatrixFunction;

namespace {
const Interval kDom(-1.0, 1.0);
}

TEST(PathOrderedExp, ConstantMatchesMatExp) {
  Rng rng(derive_seed(21, 0));
  for (int trial = 0; trial < 10; ++trial) {
    const ComplexMatrix Q = rng.matrix(3, 3, 1.0);
    const MF G = MF::constant(Q, kDom);
    EXPECT_LT(rel_diff(path_ordered_exp(G, -0.3, 0.8), mat_exp(1.1 * Q)), 1e-10);
  }
}

TEST(PathOrderedExp, ConstantViaRk4MatchesMatExp) {
  // Force the integrator by wrapping the constant in a callable.
  Rng rng(derive_seed(21, 1));
  const ComplexMatrix Q = rng.matrix(3, 3, 1.0);
  const MF G = MF::callable(3, [Q](double) { return Q; }, kDom);
  EXPECT_LT(rel_diff(path_ordered_exp(G, -1.0, 1.0), mat_exp(2.0 * Q)), 1e-10);
}

TEST(PathOrderedExp, EqualEndsGiveIdentityExactly) {
  Rng rng(derive_seed(21, 2));
  const MF G = fieldtn::testing::random_affine(rng, 3, kDom, 1.0);
  EXPECT_EQ(path_ordered_exp(G, 0.2, 0.2), identity_matrix(3));
}

TEST(PathOrderedExp, ReversedEndsAreDomainError) {
  const MF G = MF::identity(2, kDom);
  EXPECT_THROW(path_ordered_exp(G, 0.5, 0.1), DomainError);
  EXPECT_THROW(path_ordered_exp(G, -2.0, 0.1), DomainError);
}

TEST(PathOrderedExp, CommutingGeneratorClosedForm) {
  // G(x) = x A: W = exp(A (b^2 - a^2) / 2).
  Rng rng(derive_seed(21, 3));
  const ComplexMatrix A = rng.matrix(3, 3, 1.0);
  const MF G = MF::affine(ComplexMatrix::Zero(3, 3), A, kDom);
  EXPECT_LT(rel_diff(path_ordered_exp(G, -0.4, 0.9), mat_exp(0.5 * (0.81 - 0.16) * A)), 1e-10);
}

TEST(PathOrderedExp, NonCommutingMatchesMidpointProduct) {
  Rng rng(derive_seed(21, 4));
  for (int trial = 0; trial < 3; ++trial) {
    const MF G = fieldtn::testing::random_affine(rng, 3, kDom, 0.8);
    const ComplexMatrix ref = fieldtn::testing::midpoint_product([&](double x) { return G(x); }, -1.0, 1.0, 2000);
    EXPECT_LT(rel_diff(path_ordered_exp(G, -1.0, 1.0), ref), 1e-9) << trial;
  }
}

TEST(PathOrderedExp, OrderingConventions) {
  Rng rng(derive_seed(21, 5));
  const MF G = fieldtn::testing::random_affine(rng, 2, kDom, 1.0);
  const ComplexMatrix later = path_ordered_exp(G, -1.0, 1.0, {}, Ordering::kLaterLeft);
  const ComplexMatrix earlier = path_ordered_exp(G, -1.0, 1.0, {}, Ordering::kEarlierLeft);
  // Earlier-left flow of G equals the transpose of the later-left flow of G^T.
  const MF Gt = MF::callable(2, [G](double x) { return ComplexMatrix(G(x).transpose()); }, kDom);
  EXPECT_LT(rel_diff(earlier, path_ordered_exp(Gt, -1.0, 1.0).transpose()), 1e-9);
  EXPECT_GT((later - earlier).norm(), 1e-3);
}

TEST(PathOrderedExp, CocycleLaw) {
  Rng rng(derive_seed(21, 6));
  PropagatorConfig cfg;
  for (int trial = 0; trial < 100; ++trial) {
    const int D = 1 + static_cast<int>(rng.next() % 4);
    const MF G = fieldtn::testing::random_affine(rng, D, kDom, 1.0);
    std::vector<double> p = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    std::sort(p.begin(), p.end());
    const ComplexMatrix ac = path_ordered_exp(G, p[0], p[2], cfg);
    const ComplexMatrix split = path_ordered_exp(G, p[1], p[2], cfg) * path_ordered_exp(G, p[0], p[1], cfg);
    EXPECT_LE((ac - split).norm(), 10 * cfg.tol * ac.norm()) << trial;
  }
}

TEST(PathOrderedExp, AntiHermitianGivesUnitary) {
  Rng rng(derive_seed(21, 7));
  PropagatorConfig cfg;
  for (int trial = 0; trial < 10; ++trial) {
    const ComplexMatrix a0 = rng.matrix(3, 3), a1 = rng.matrix(3, 3);
    const MF G = MF::affine(a0 - a0.adjoint(), a1 - a1.adjoint(), kDom);
    const ComplexMatrix V = path_ordered_exp(G, -1.0, 1.0, cfg);
    EXPECT_LE((V.adjoint() * V - identity_matrix(3)).norm(), 10 * cfg.tol);
  }
}

TEST(PathOrderedExp, DeterminantIdentity) {
  Rng rng(derive_seed(21, 8));
  PropagatorConfig cfg;
  for (int trial = 0; trial < 10; ++trial) {
    const MF G = fieldtn::testing::random_affine(rng, 3, kDom, 0.7);
    const ComplexMatrix V = path_ordered_exp(G, -0.5, 0.75, cfg);
    // Tr G is affine, so the midpoint rule is exact.
    const Complex integral = 1.25 * G(0.125).trace();
    const Complex expected = std::exp(integral);
    EXPECT_LE(std::abs(V.determinant() - expected), 100 * cfg.tol * std::abs(expected));
  }
}

TEST(PathOrderedExp, PiecewiseConstantIsExactProduct) {
  Rng rng(derive_seed(21, 9));
  const ComplexMatrix M0 = rng.matrix(2, 2), M1 = rng.matrix(2, 2), M2 = rng.matrix(2, 2);
  const MF G = MF::grid({-1.0, -0.2, 0.5}, {M0, M1, M2}, 0, kDom);
  const ComplexMatrix expected = mat_exp(0.5 * M2) * mat_exp(0.7 * M1) * mat_exp(0.8 * M0);
  EXPECT_LT(rel_diff(path_ordered_exp(G, -1.0, 1.0), expected), 1e-13);
  const ComplexMatrix again = path_ordered_exp(G, -1.0, 1.0);
  EXPECT_EQ(again, path_ordered_exp(G, -1.0, 1.0));
}

TEST(PathOrderedExp, FixedStepMethod) {
  Rng rng(derive_seed(21, 10));
  const MF G = fieldtn::testing::random_affine(rng, 2, kDom, 1.0);
  PropagatorConfig cfg;
  cfg.method = StepMethod::kFixedRk4;
  cfg.max_steps = 4000;
  EXPECT_LT(rel_diff(path_ordered_exp(G, -1.0, 1.0, cfg), path_ordered_exp(G, -1.0, 1.0)), 1e-10);
}

TEST(PathOrderedExp, StepBudgetExceededCarriesEstimate) {
  Rng rng(derive_seed(21, 11));
  const MF G = fieldtn::testing::random_affine(rng, 3, kDom, 3.0);
  PropagatorConfig cfg;
  cfg.tol = 1e-14;
  cfg.max_steps = 8;
  try {
    path_ordered_exp(G, -1.0, 1.0, cfg);
    FAIL() << "expected an accuracy error";
  } catch (const AccuracyError& e) {
    EXPECT_GT(e.achieved(), 0.0);
  }
}

TEST(PropagatorConfig, Validation) {
  PropagatorConfig cfg;
  cfg.tol = 1e-2;
  EXPECT_THROW(cfg.validate(), DomainError);
  cfg.tol = 1e-10;
  cfg.max_steps = 4;
  EXPECT_THROW(cfg.validate(), DomainError);
}

TEST(ReversePropagator, InverseOfForward) {
  Rng rng(derive_seed(21, 12));
  const MF G = fieldtn::testing::random_affine(rng, 3, kDom, 1.0);
  const ComplexMatrix fwd = path_ordered_exp(G, -0.2, 0.7);
  EXPECT_LT((reverse_propagator(G, -0.2, 0.7) * fwd - identity_matrix(3)).norm(), 1e-10);
}

TEST(PropagatorTable, MatchesDirectCalls) {
  Rng rng(derive_seed(21, 13));
  const MF G = fieldtn::testing::random_affine(rng, 3, kDom, 1.0);
  const PropagatorTable table(G);
  for (int trial = 0; trial < 20; ++trial) {
    double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
    if (a > b) std::swap(a, b);
    const ComplexMatrix direct = path_ordered_exp(G, a, b, {}, Ordering::kEarlierLeft);
    EXPECT_LT(rel_diff(table(a, b), direct), 1e-9) << a << " " << b;
  }
  EXPECT_EQ(table(0.3, 0.3), identity_matrix(3));
}

TEST(ChainEvaluator, TraceAllMatchesSingleTraces) {
  Rng rng(derive_seed(21, 14));
  const ComplexMatrix B = rng.matrix(2, 2);
  const MF G = fieldtn::testing::random_affine(rng, 2, kDom, 1.0);
  std::vector<MF> ins = {fieldtn::testing::random_affine(rng, 2, kDom, 1.0),
                         fieldtn::testing::random_affine(rng, 2, kDom, 1.0)};
  const ChainEvaluator ev(B, G, ins);
  const std::vector<double> xs = {-0.6, 0.1, 0.4};
  const auto all = ev.trace_all(xs);
  ASSERT_EQ(all.size(), 8u);
  for (int idx = 0; idx < 8; ++idx) {
    const std::vector<int> labels = {(idx >> 2) & 1, (idx >> 1) & 1, idx & 1};
    // Hand contraction with direct propagators.
    ComplexMatrix P = B * path_ordered_exp(G, -1.0, xs[0], {}, Ordering::kEarlierLeft);
    for (int k = 0; k < 3; ++k) {
      P = P * ins[static_cast<std::size_t>(labels[static_cast<std::size_t>(k)])](xs[static_cast<std::size_t>(k)]);
      const double next = k + 1 < 3 ? xs[static_cast<std::size_t>(k + 1)] : 1.0;
      P = P * path_ordered_exp(G, xs[static_cast<std::size_t>(k)], next, {}, Ordering::kEarlierLeft);
    }
    EXPECT_LT(std::abs(all[static_cast<std::size_t>(idx)] - P.trace()), 1e-9 * std::max(1.0, std::abs(P.trace())));
    EXPECT_LT(std::abs(ev.trace(labels, xs) - P.trace()), 1e-9 * std::max(1.0, std::abs(P.trace())));
  }
}

TEST(RequireStrictlyIncreasing, Rejects) {
  const std::vector<double> bad = {0.1, 0.1};
  const std::vector<double> out = {0.1, 2.0};
  EXPECT_THROW(require_strictly_increasing(bad, kDom), DomainError);
  EXPECT_THROW(require_strictly_increasing(out, kDom), DomainError);
}
