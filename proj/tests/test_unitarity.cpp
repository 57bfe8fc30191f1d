#include <gtest/gtest.h>

#include "fieldtn/catalog.hpp"
#include "fieldtn/errors.hpp"
#include "fieldtn/unitarity.hpp"
#include "support.hpp"

using namespace fieldtn;
using MF = MatrixFunction;

namespace {

const Interval kDom = centered_interval(1.0);

MF smooth_alpha() {
  return MF::scalar([](double x) { return Complex(0.6 * std::cos(2 * x), 0.3 * x); }, kDom);
}

Cmpo scalar_T(Complex t) {
  const MF z = MF::zero(1, kDom);
  return Cmpo(kDom, identity_matrix(1), z, z, z, MF::constant(ComplexMatrix::Constant(1, 1, t), kDom));
}

}  // namespace

TEST(CheckUnitary, DisplacementPasses) {
  const UnitarityReport r = check_unitary(displacement_cmpu(smooth_alpha()), 3, 200, 1e-8, 5);
  EXPECT_TRUE(r.passed);
  EXPECT_LE(r.max_A_deviation, 1e-9);
  EXPECT_LE(r.max_offdiag, 1e-9);
  ASSERT_EQ(r.probes.size(), 4u);
  // Both sides; 3^j strings at each of 200 samples, one tuple for j = 0.
  EXPECT_EQ(r.probes[0], 2);
  EXPECT_EQ(r.probes[3], 2LL * 27 * 200);
  EXPECT_EQ(r.j_max, 3);
  EXPECT_EQ(r.seed, 5u);
}

TEST(CheckUnitary, ScalarTwoFails) {
  const Cmpo O = scalar_T(2.0);
  const std::vector<CoeffLabel> a = {CoeffLabel::A};
  EXPECT_LT(std::abs(cmpo_coefficient(compose(adjoint(O), O), a, std::vector<double>{0.1}) - 4.0), 1e-14);
  UnitarityOptions opt;
  opt.j_max = 1;
  opt.samples_per_j = 10;
  const UnitarityReport r = check_unitary(O, opt);
  EXPECT_FALSE(r.passed);
  EXPECT_NEAR(r.max_A_deviation, 3.0, 1e-12);
}

TEST(CheckUnitary, ParityPasses) {
  EXPECT_TRUE(check_unitary(parity_phase_cmpu(1.0, kDom), 4, 100, 1e-8, 1).passed);
}

TEST(CheckUnitary, OneSidedIsometryDiagnostics) {
  // T = 0, L = 0, B = 1: the vacuum projector is neither isometric nor coisometric
  // when probed beyond j = 0.
  const MF z = MF::zero(1, kDom);
  const Cmpo P(kDom, identity_matrix(1), z, z, z, z);
  UnitarityOptions left;
  left.sides = UnitaritySides::kLeftOnly;
  left.j_max = 2;
  left.samples_per_j = 5;
  const auto r = check_unitary(P, left);
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.probes[0], 1);
}

TEST(CheckUnitary, MonotoneInSamples) {
  Rng rng(derive_seed(51, 0));
  const Cmpo O = fieldtn::testing::random_cmpo(rng, 2, kDom, 0.3);
  const auto small = check_unitary(O, 3, 20, 1e-8, 9);
  const auto large = check_unitary(O, 3, 80, 1e-8, 9);
  EXPECT_GE(large.max_A_deviation, small.max_A_deviation);
  EXPECT_GE(large.max_offdiag, small.max_offdiag);
}

TEST(CheckUnitary, ReproducibleAcrossThreadCounts) {
  Rng rng(derive_seed(51, 1));
  const Cmpo O = fieldtn::testing::random_cmpo(rng, 2, kDom, 0.3);
  UnitarityOptions a, b;
  a.threads = 1;
  b.threads = 3;
  a.j_max = b.j_max = 3;
  a.samples_per_j = b.samples_per_j = 30;
  const auto ra = check_unitary(O, a), rb = check_unitary(O, b);
  EXPECT_EQ(ra.max_A_deviation, rb.max_A_deviation);
  EXPECT_EQ(ra.max_offdiag, rb.max_offdiag);
}

TEST(CheckUnitary, SensitivityToPerturbations) {
  const std::vector<Cmpo> passing = {displacement_cmpu(smooth_alpha()), parity_phase_cmpu(0.8, kDom),
                                     number_controlled_phase_cmpu(3, 1.0, kDom)};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(derive_seed(52, seed));
    const Cmpo& O = passing[seed % passing.size()];
    const int D = O.D();
    ComplexMatrix delta = rng.matrix(D, D);
    delta *= 0.1 / delta.norm();
    const MF dm = MF::constant(delta, kDom);
    const int which = static_cast<int>(seed % 5);
    const Cmpo P(kDom, which == 0 ? ComplexMatrix(O.B() + delta) : O.B(), which == 1 ? O.Q() + dm : O.Q(),
                 which == 2 ? O.L() + dm : O.L(), which == 3 ? O.R() + dm : O.R(),
                 which == 4 ? O.T() + dm : O.T());
    EXPECT_FALSE(check_unitary(P, 4, 200, 1e-8, seed).passed) << seed;
  }
}

TEST(SamplePoints, SortedAndSeeded) {
  const auto a = unitarity_sample_points(kDom, 3, 4, 7);
  const auto b = unitarity_sample_points(kDom, 3, 4, 7);
  const auto c = unitarity_sample_points(kDom, 3, 4, 8);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  ASSERT_EQ(a.size(), 4u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  for (double x : a) EXPECT_TRUE(kDom.contains(x));
}

TEST(InteractionPicture, ZeroQ) {
  Rng rng(derive_seed(53, 0));
  const ComplexMatrix L = rng.matrix(2, 2), R = rng.matrix(2, 2), T = rng.matrix(2, 2), B = rng.matrix(2, 2);
  const Cmpo O(kDom, B, MF::zero(2, kDom), MF::constant(L, kDom), MF::constant(R, kDom), MF::constant(T, kDom));
  const auto ip = interaction_picture(O);
  EXPECT_LT((ip.boundary - B).norm(), 1e-15);
  EXPECT_LT((ip.K_L(0.3) - L).norm(), 1e-15);
  EXPECT_LT((ip.K_A(-0.2) - T).norm(), 1e-15);
}

TEST(InteractionPicture, ParityTwoPoint) {
  const double omega = 1.4;
  const Cmpo O = parity_phase_cmpu(omega, kDom);
  const auto ip = interaction_picture(O);
  const std::vector<double> xs = {-0.2, 0.35};
  const ComplexMatrix prod = ip.boundary * ip.K_A(xs[0]) * ip.K_A(xs[1]);
  EXPECT_LT(std::abs(prod.trace() - std::exp(-kI * omega * (xs[1] - xs[0]))), 1e-10);
}

TEST(InteractionPicture, MatchesCoefficients) {
  Rng rng(derive_seed(53, 1));
  const Cmpo O = fieldtn::testing::random_cmpo(rng, 3, kDom, 0.7, true);
  const auto ip = interaction_picture(O);
  EXPECT_LT(std::abs(ip.boundary.trace() - cmpo_coefficient(O, {}, std::vector<double>{})), 1e-10);
  for (int s = 0; s < 20; ++s) {
    const int j = 1 + static_cast<int>(rng.next() % 3);
    const auto xs = fieldtn::testing::sorted_uniform(rng, kDom, j);
    const auto lab = fieldtn::testing::random_labels(rng, j);
    const Complex c = cmpo_coefficient(O, lab, xs);
    EXPECT_LT(std::abs(ip.trace(lab, xs) - c), 1e-9 * std::max(1.0, std::abs(c)));
  }
}

TEST(InteractionPicture, RejectsNonUniform) {
  Rng rng(derive_seed(53, 2));
  EXPECT_THROW(interaction_picture(fieldtn::testing::random_cmpo(rng, 2, kDom, 0.5)), DomainError);
}
