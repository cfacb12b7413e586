// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fap/quadrature.hpp"

namespace fap {
namespace {

TEST(GaussHermite, WeightsSumToRootPi) {
  for (int order : {1, 2, 5, 8, 16, 24}) {
    const HermiteRule r = gauss_hermite_rule(order);
    double sum = 0.0;
    for (double w : r.weights) sum += w;
    EXPECT_NEAR(sum, std::sqrt(std::numbers::pi), 1e-12) << order;
  }
}

TEST(GaussHermite, ExactForPolynomialsUpToTwiceOrderMinusOne) {
  // int x^(2k) exp(-x^2) dx = Gamma(k + 1/2)
  const HermiteRule r = gauss_hermite_rule(8);
  for (int k = 0; k < 8; ++k) {
    double q = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) q += r.weights[i] * std::pow(r.nodes[i], 2 * k);
    EXPECT_NEAR(q / std::tgamma(k + 0.5), 1.0, 1e-11) << k;
  }
}

TEST(GaussHermite, ThreeNodeRuleClosedForm) {
  const HermiteRule r = gauss_hermite_rule(3);
  EXPECT_NEAR(r.nodes[0], -std::sqrt(1.5), 1e-14);
  EXPECT_NEAR(r.nodes[1], 0.0, 1e-14);
  EXPECT_NEAR(r.weights[1], 2.0 * std::sqrt(std::numbers::pi) / 3.0, 1e-14);
}

TEST(ComplexGrid, MomentsOfStandardComplexGaussian) {
  for (int dim : {1, 2}) {
    const auto g = complex_gaussian_grid(8, dim);
    EXPECT_NEAR(g->weights.sum(), 1.0, 1e-14);
    const CMatrix cov = g->nodes * g->weights.cast<cplx>().asDiagonal() * g->nodes.adjoint();
    EXPECT_LT((cov - CMatrix::Identity(dim, dim)).norm(), 1e-8);
    // E[n n^T] = 0 for circular symmetry
    const CMatrix pseudo = g->nodes * g->weights.cast<cplx>().asDiagonal() * g->nodes.transpose();
    EXPECT_LT(pseudo.norm(), 1e-8);
    // E|n_0|^4 = 2
    double m4 = 0.0;
    for (Eigen::Index j = 0; j < g->weights.size(); ++j) m4 += g->weights(j) * std::pow(std::norm(g->nodes(0, j)), 2);
    EXPECT_NEAR(m4, 2.0, 1e-8);
  }
}

TEST(ComplexGrid, PruningDropsOnlyNegligibleMass) {
  const auto full = detail::build_grid(16, 1);
  EXPECT_LT(full.weights.size(), 256);
  EXPECT_GT(full.weights.minCoeff(), kGridPruneWeight * 0.99);
}

TEST(ComplexGrid, CachedAndCapped) {
  const auto a = complex_gaussian_grid(6, 2);
  const auto b = complex_gaussian_grid(6, 2);
  EXPECT_EQ(a.get(), b.get());
  EXPECT_THROW(complex_gaussian_grid(16, 3, 1u << 20), CapExceeded);
  EXPECT_THROW(gauss_hermite_rule(0), std::invalid_argument);
}

}  // namespace
}  // namespace fap
