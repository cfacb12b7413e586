// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "fap/finite_alphabet.hpp"
#include "fap/random.hpp"
#include "support/oracles.hpp"

namespace fap {
namespace {

const Constellation kBpsk(AlphabetKind::kBpsk, 2);
const Constellation kQpsk(AlphabetKind::kQpsk, 4);
const NoiseExpectation kGh = NoiseExpectation::gauss_hermite(16);

RVector vec(std::initializer_list<double> v) {
  RVector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

TEST(GroupMetrics, NoSignalNoInformation) {
  const GroupMetrics g = group_metrics(vec({3.0, 1.0}), vec({0.0, 0.0}), random_unitary(2, 1), kQpsk, kGh);
  EXPECT_NEAR(g.mi_bits, 0.0, 1e-12);
  EXPECT_LT((g.error_cov - CMatrix::Identity(2, 2)).norm(), 1e-12);
}

TEST(GroupMetrics, ZeroChannelGivesPriorCovariance) {
  const CMatrix e = group_error_covariance(vec({0.0, 0.0}), vec({1.0, 1.0}), CMatrix::Identity(2, 2), kBpsk, kGh);
  EXPECT_LT((e - CMatrix::Identity(2, 2)).norm(), 1e-12);
}

TEST(GroupMetrics, ScalarBpskMatchesIndependentQuadrature) {
  // The MMSE integrand is less smooth than the MI one; a 16-point rule is off
  // by ~1e-3 there, so it is checked on a finer grid.
  const NoiseExpectation fine = NoiseExpectation::gauss_hermite(64);
  for (double rho : {0.1, 1.0, 3.0, 10.0}) {
    const GroupMetrics g = group_metrics(vec({rho}), vec({1.0}), CMatrix::Identity(1, 1), kBpsk, kGh);
    EXPECT_NEAR(g.mi_bits, oracle::bpsk_mi_bits(rho), 1e-3) << rho;
    EXPECT_NEAR(g.error_cov(0, 0).real(), oracle::bpsk_mmse(rho), 2e-3) << rho;
    const GroupMetrics f = group_metrics(vec({rho}), vec({1.0}), CMatrix::Identity(1, 1), kBpsk, fine);
    EXPECT_NEAR(f.mi_bits, oracle::bpsk_mi_bits(rho), 1e-5) << rho;
    EXPECT_NEAR(f.error_cov(0, 0).real(), oracle::bpsk_mmse(rho), 1e-4) << rho;
  }
}

TEST(GroupMetrics, PowerAndGainEnterAsProduct) {
  const double a = group_mutual_information(vec({4.0}), vec({0.5}), CMatrix::Identity(1, 1), kQpsk, kGh);
  const double b = group_mutual_information(vec({1.0}), vec({1.0}), CMatrix::Identity(1, 1), kQpsk, kGh);
  EXPECT_NEAR(a, b, 1e-12);
}

TEST(GroupMetrics, SaturatesAtHighSnr) {
  const GroupMetrics g =
      group_metrics(vec({1e6, 1e6}), vec({1.0, 1.0}), CMatrix::Identity(2, 2), kQpsk, kGh);
  EXPECT_NEAR(g.mi_bits, 4.0, 1e-3);
  EXPECT_LT(g.error_cov.norm(), 1e-3);
}

TEST(GroupMetrics, BoundsPsdAndMonotoneScaling) {
  GaussianSource rng(5);
  for (int trial = 0; trial < 6; ++trial) {
    const Constellation& c = trial % 2 == 0 ? kBpsk : kQpsk;
    const RVector xi = vec({0.2 + 4 * rng.uniform(), 0.2 + 4 * rng.uniform()});
    const RVector lam = vec({rng.uniform(), rng.uniform()});
    const CMatrix v = random_unitary(2, rng);
    double prev = -1.0;
    for (double scale : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0}) {
      const GroupMetrics g = group_metrics(xi, lam * scale, v, c, kGh);
      EXPECT_GE(g.mi_bits, 0.0);
      EXPECT_LE(g.mi_bits, 2.0 * c.bits_per_symbol() + 1e-12);
      EXPECT_GE(g.mi_bits, prev - 1e-9);
      prev = g.mi_bits;
      EXPECT_LT((g.error_cov - g.error_cov.adjoint()).norm(), 1e-12);
      Eigen::SelfAdjointEigenSolver<CMatrix> e(g.error_cov);
      EXPECT_GE(e.eigenvalues().minCoeff(), -1e-9);
      EXPECT_LE(e.eigenvalues().maxCoeff(), 1.0 + 1e-9);
      const CMatrix lv = lam.cast<cplx>().asDiagonal() * v * scale;
      EXPECT_LT((g.omega - lv * g.error_cov * lv.adjoint()).norm(), 1e-12);
    }
  }
}

TEST(GroupMetrics, QuadratureAgreesWithMonteCarlo) {
  GaussianSource rng(6);
  for (int trial = 0; trial < 4; ++trial) {
    const Constellation& c = trial < 2 ? kBpsk : kQpsk;
    const int n = trial % 2 == 0 ? 1 : 2;
    RVector xi(n);
    RVector lam(n);
    for (int i = 0; i < n; ++i) {
      xi(i) = 0.5 + 3.0 * rng.uniform();
      lam(i) = 0.5 + rng.uniform();
    }
    const CMatrix v = random_unitary(n, rng);
    const GroupMetrics q = group_metrics(xi, lam, v, c, kGh);
    const GroupMetrics m = group_metrics(xi, lam, v, c, NoiseExpectation::monte_carlo(100000, 99 + trial));
    ASSERT_GT(m.std_err, 0.0);
    EXPECT_EQ(q.std_err, 0.0);
    EXPECT_LT(std::abs(q.mi_bits - m.mi_bits), 3.0 * m.std_err) << trial << ": " << q.mi_bits << " vs " << m.mi_bits;
  }
}

TEST(ChannelMetrics, InvariantToOutputRotation) {
  GaussianSource rng(7);
  const CMatrix f = rng.complex_normal(3, 2);
  const CMatrix q = random_unitary(3, rng);
  const AlphabetMetrics a = channel_metrics(f, kQpsk, kGh);
  const AlphabetMetrics b = channel_metrics(q * f, kQpsk, kGh);
  EXPECT_NEAR(a.mi_bits, b.mi_bits, 1e-10);
  EXPECT_LT((a.error_cov - b.error_cov).norm(), 1e-10);
}

TEST(ChannelMetrics, RankDeficientChannel) {
  // Two BPSK streams superposed on one real direction with equal gain: the
  // sum takes values {-2, 0, 0, 2}, so the MI is below 1.5 bits.
  CMatrix f(1, 2);
  f << 30.0, 30.0;
  EXPECT_NEAR(channel_metrics(f, kBpsk, kGh, false).mi_bits, 1.5, 1e-3);
}

TEST(ChannelMetrics, RankDeficientReductionIsContinuous) {
  // Eigenvector phases must not leak into the reduced channel, otherwise
  // sampled and quadrature results jump under tiny perturbations.
  GaussianSource rng(31);
  const CMatrix a = rng.complex_normal(4, 2);
  const CMatrix b = rng.complex_normal(2, 4);
  const CMatrix f = a * b;
  const CMatrix g = a * (b + 1e-7 * rng.complex_normal(2, 4));
  const CMatrix rf = detail::reduce_channel(f);
  const CMatrix rg = detail::reduce_channel(g);
  ASSERT_EQ(rf.rows(), 2);
  EXPECT_LT((rf.adjoint() * rf - f.adjoint() * f).norm(), 1e-10 * f.squaredNorm());
  EXPECT_LT((rf - rg).norm(), 1e-5 * rf.norm());
  const NoiseExpectation mc = NoiseExpectation::monte_carlo(500, 7);
  EXPECT_NEAR(channel_metrics(f, kQpsk, mc, false).mi_bits, channel_metrics(g, kQpsk, mc, false).mi_bits, 1e-5);
}

TEST(NoiseExpectation, AutoPolicyBudgetsNodesTimesHypotheses) {
  const NoiseExpectation ne;
  EXPECT_EQ(ne.order_for(1), 16);
  EXPECT_EQ(ne.order_for(2), 8);
  EXPECT_TRUE(ne.uses_quadrature(2, 16));    // QPSK pair: 4096 nodes x 16
  EXPECT_TRUE(ne.uses_quadrature(1, 256));   // 256 nodes x 256
  EXPECT_FALSE(ne.uses_quadrature(2, 256));  // QPSK quad on a rank-2 channel
  EXPECT_FALSE(ne.uses_quadrature(3, 1));
  EXPECT_TRUE(NoiseExpectation::gauss_hermite(8).uses_quadrature(2, 256));
  EXPECT_FALSE(NoiseExpectation::monte_carlo(100, 1).uses_quadrature(1, 1));
}

TEST(ChannelMetrics, MethodValidation) {
  NoiseExpectation ne = NoiseExpectation::monte_carlo(50, 1);
  EXPECT_THROW(channel_metrics(CMatrix::Identity(1, 1), kBpsk, ne), std::invalid_argument);
  EXPECT_THROW(group_metrics(vec({-1.0}), vec({1.0}), CMatrix::Identity(1, 1), kBpsk, kGh), std::invalid_argument);
  EXPECT_THROW(group_metrics(vec({1.0}), vec({1.0}), CMatrix::Identity(1, 1), kQpsk, kGh, true, 3), CapExceeded);
}

TEST(AssembleOmega, SingleGroupIsARotation) {
  const StreamPartition part = StreamPartition::identity(3, 3);
  const CMatrix u = random_unitary(3, 8);
  const GroupMetrics g = group_metrics(vec({1.0, 2.0, 0.5}), vec({1.0, 0.7, 0.2}), random_unitary(3, 9), kBpsk, NoiseExpectation{});
  const CMatrix omega = assemble_omega(part, {g}, u);
  EXPECT_LT((omega - u * g.omega * u.adjoint()).norm(), 1e-12);
}

TEST(AssembleOmega, PermutedBlocksAndTrace) {
  const StreamPartition part({0, 2, 1, 3}, 2);
  GroupMetrics a;
  GroupMetrics b;
  a.omega = CMatrix::Constant(2, 2, cplx(1.0, 0.0));
  b.omega = CMatrix::Constant(2, 2, cplx(2.0, 0.0));
  const CMatrix eq = assemble_omega(part, {a, b}, CMatrix::Identity(4, 4));
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const bool first = (i == 0 || i == 2) && (j == 0 || j == 2);
      const bool second = (i == 1 || i == 3) && (j == 1 || j == 3);
      EXPECT_EQ(eq(i, j), first ? cplx(1.0) : second ? cplx(2.0) : cplx(0.0)) << i << "," << j;
    }
  }
  const CMatrix rotated = assemble_omega(part, {a, b}, random_unitary(4, 10));
  EXPECT_NEAR(rotated.trace().real(), 6.0, 1e-12);
  EXPECT_THROW(assemble_omega(part, {a}, CMatrix::Identity(4, 4)), std::invalid_argument);
}

TEST(ErgodicMI, ZeroPrecoderCarriesNothing) {
  const ChannelStatistics s = random_statistics(2, 2, RiceFactor::finite(1.0), 3);
  const ErgodicMI e = exact_ergodic_mi(s, CMatrix::Zero(2, 2), kQpsk, 20, kGh, 1);
  EXPECT_NEAR(e.mi_bits, 0.0, 1e-12);
}

TEST(ErgodicMI, ScalarDeterministicBpsk) {
  const ChannelStatistics s = new_statistics(CMatrix::Identity(1, 1), CMatrix::Identity(1, 1), RMatrix::Zero(1, 1),
                                             CMatrix::Constant(1, 1, cplx(0.3, -0.4)), RiceFactor::infinite());
  const double p = 2.5;
  const ErgodicMI e = exact_ergodic_mi(s, CMatrix::Constant(1, 1, std::sqrt(p)), kBpsk, 10, kGh, 1);
  EXPECT_NEAR(e.mi_bits, oracle::bpsk_mi_bits(std::norm(s.h_bar()(0, 0)) * p), 1e-3);
  EXPECT_EQ(e.std_err, 0.0);
}

TEST(ErgodicMI, SaturatesOnFullRankLos) {
  CMatrix h(2, 2);
  h << 1.0, 0.3, cplx(0.0, 0.5), -1.0;
  const ChannelStatistics s = new_statistics(CMatrix::Identity(2, 2), CMatrix::Identity(2, 2), RMatrix::Zero(2, 2),
                                             h, RiceFactor::infinite());
  const ErgodicMI e = exact_ergodic_mi(s, CMatrix::Identity(2, 2) * 100.0, kQpsk, 1, kGh, 1);
  EXPECT_NEAR(e.mi_bits, 4.0, 1e-2);
}

TEST(ErgodicMI, SeededAndBounded) {
  const ChannelStatistics s = random_statistics(2, 2, RiceFactor::finite(0.5), 4);
  const CMatrix b = CMatrix::Identity(2, 2) * 1.5;
  const NoiseExpectation ne = NoiseExpectation::monte_carlo(500, 3);
  const ErgodicMI a = exact_ergodic_mi(s, b, kQpsk, 30, ne, 11);
  const ErgodicMI c = exact_ergodic_mi(s, b, kQpsk, 30, ne, 11);
  EXPECT_EQ(a.mi_bits, c.mi_bits);
  EXPECT_GT(a.std_err, 0.0);
  EXPECT_GE(a.mi_bits, 0.0);
  EXPECT_LE(a.mi_bits, 4.0);
  EXPECT_THROW(exact_ergodic_mi(s, b, kQpsk, 30, ne, 11, 15), CapExceeded);
}

}  // namespace
}  // namespace fap
