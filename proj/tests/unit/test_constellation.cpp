// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <bit>
#include <complex>
#include <set>
#include <utility>

#include "fap/constellation.hpp"

namespace fap {
namespace {

TEST(Constellation, BpskIsAntipodal) {
  const Constellation c(AlphabetKind::kBpsk, 2);
  ASSERT_EQ(c.size(), 2);
  EXPECT_EQ(c[0], cplx(1.0, 0.0));
  EXPECT_EQ(c[1], cplx(-1.0, 0.0));
}

TEST(Constellation, QpskPoints) {
  const Constellation c(AlphabetKind::kQpsk, 4);
  const double a = 1.0 / std::sqrt(2.0);
  std::set<std::pair<double, double>> want{{a, a}, {a, -a}, {-a, a}, {-a, -a}};
  std::set<std::pair<double, double>> got;
  for (const cplx& p : c.points()) {
    EXPECT_NEAR(std::abs(std::abs(p.real()) - a), 0.0, 1e-15);
    got.insert({p.real() > 0 ? a : -a, p.imag() > 0 ? a : -a});
  }
  EXPECT_EQ(got, want);
}

TEST(Constellation, Qam16OnScaledLattice) {
  const Constellation c(AlphabetKind::kQam, 16);
  const double scale = 1.0 / std::sqrt(10.0);
  std::set<std::pair<int, int>> lattice;
  for (const cplx& p : c.points()) {
    const double re = p.real() / scale;
    const double im = p.imag() / scale;
    const int ri = static_cast<int>(std::lround(re));
    const int ii = static_cast<int>(std::lround(im));
    EXPECT_NEAR(re, ri, 1e-12);
    EXPECT_NEAR(im, ii, 1e-12);
    EXPECT_TRUE(std::abs(ri) == 1 || std::abs(ri) == 3);
    EXPECT_TRUE(std::abs(ii) == 1 || std::abs(ii) == 3);
    lattice.insert({ri, ii});
  }
  EXPECT_EQ(lattice.size(), 16u);
}

TEST(Constellation, InvariantsForEverySupportedAlphabet) {
  for (const char* name : {"bpsk", "qpsk", "qam4", "qam16", "qam64"}) {
    const Constellation c = constellation_from_name(name);
    cplx mean = 0.0;
    double energy = 0.0;
    for (const cplx& p : c.points()) {
      mean += p;
      energy += std::norm(p);
    }
    EXPECT_LT(std::abs(mean) / c.size(), 1e-12) << name;
    EXPECT_NEAR(energy / c.size(), 1.0, 1e-12) << name;
    for (int i = 0; i < c.size(); ++i)
      for (int k = i + 1; k < c.size(); ++k) EXPECT_GT(std::abs(c[i] - c[k]), 1e-6) << name;
  }
}

TEST(Constellation, GrayNeighboursDifferInOneBit) {
  // Nearest lattice neighbours of a Gray-mapped QAM differ in exactly one label bit.
  const Constellation c(AlphabetKind::kQam, 16);
  const double step = 2.0 / std::sqrt(10.0);
  for (int i = 0; i < c.size(); ++i) {
    for (int k = 0; k < c.size(); ++k) {
      if (std::abs(std::abs(c[i] - c[k]) - step) < 1e-9) EXPECT_EQ(std::popcount(static_cast<unsigned>(i ^ k)), 1);
    }
  }
}

TEST(Constellation, RejectsUnsupported) {
  EXPECT_THROW(Constellation(AlphabetKind::kQam, 8), std::invalid_argument);
  EXPECT_THROW(Constellation(AlphabetKind::kBpsk, 4), std::invalid_argument);
  EXPECT_THROW(Constellation(AlphabetKind::kQpsk, 2), std::invalid_argument);
  EXPECT_THROW(constellation_from_name("8psk"), std::invalid_argument);
}

TEST(Enumeration, BpskSingle) {
  const CMatrix v = enumerate_group_vectors(Constellation(AlphabetKind::kBpsk, 2), 1);
  ASSERT_EQ(v.cols(), 2);
  EXPECT_EQ(v(0, 0), cplx(1.0));
  EXPECT_EQ(v(0, 1), cplx(-1.0));
}

TEST(Enumeration, BpskPairIsLexicographic) {
  const CMatrix v = enumerate_group_vectors(Constellation(AlphabetKind::kBpsk, 2), 2);
  ASSERT_EQ(v.cols(), 4);
  const double want[4][2] = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
  for (int k = 0; k < 4; ++k) {
    EXPECT_EQ(v(0, k).real(), want[k][0]);
    EXPECT_EQ(v(1, k).real(), want[k][1]);
  }
}

TEST(Enumeration, CountsAndMoments) {
  for (const char* name : {"bpsk", "qpsk", "qam16"}) {
    const Constellation c = constellation_from_name(name);
    for (int n = 1; n <= 3; ++n) {
      const CMatrix v = enumerate_group_vectors(c, n);
      ASSERT_EQ(static_cast<std::uint64_t>(v.cols()), checked_enumeration_size(c.size(), n));
      std::uint64_t expected = 1;
      for (int i = 0; i < n; ++i) expected *= static_cast<std::uint64_t>(c.size());
      EXPECT_EQ(static_cast<std::uint64_t>(v.cols()), expected);
      const double count = static_cast<double>(v.cols());
      EXPECT_LT((v.rowwise().sum() / count).norm(), 1e-10);
      const CMatrix cov = v * v.adjoint() / count;
      EXPECT_LT((cov - CMatrix::Identity(n, n)).norm(), 1e-10);
      std::set<std::vector<std::pair<double, double>>> distinct;
      for (Eigen::Index k = 0; k < v.cols(); ++k) {
        std::vector<std::pair<double, double>> key;
        for (int i = 0; i < n; ++i) key.emplace_back(v(i, k).real(), v(i, k).imag());
        distinct.insert(key);
      }
      EXPECT_EQ(distinct.size(), static_cast<std::size_t>(v.cols()));
    }
  }
}

TEST(Enumeration, QpskPairHasSixteenVectors) {
  EXPECT_EQ(enumerate_group_vectors(Constellation(AlphabetKind::kQpsk, 4), 2).cols(), 16);
}

TEST(Enumeration, CapRefusalNamesTheRequiredCap) {
  const Constellation c(AlphabetKind::kQpsk, 4);
  try {
    enumerate_group_vectors(c, 11);
    FAIL() << "expected CapExceeded";
  } catch (const CapExceeded& e) {
    EXPECT_NE(std::string(e.what()).find("4^11"), std::string::npos) << e.what();
  }
  EXPECT_THROW(checked_enumeration_size(4, 3, 63), CapExceeded);
  EXPECT_EQ(checked_enumeration_size(4, 3, 64), 64u);
  EXPECT_THROW(checked_enumeration_size(4, 0), std::invalid_argument);
}

TEST(RotationSymmetry, QuarterTurnForSquareAlphabets) {
  for (const char* name : {"qpsk", "qam16"}) {
    const Constellation c = constellation_from_name(name);
    const RotationSymmetry sym = rotation_symmetry(c);
    EXPECT_EQ(sym.order, 4);
    for (int i = 0; i < c.size(); ++i)
      EXPECT_LT(std::abs(c[sym.image[static_cast<std::size_t>(i)]] - cplx(0, 1) * c[i]), 1e-12);
  }
  EXPECT_EQ(rotation_symmetry(Constellation(AlphabetKind::kBpsk, 2)).order, 2);
}

}  // namespace
}  // namespace fap
