// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "fap/complexity.hpp"

namespace fap {
namespace {

std::vector<std::string> row(int m, int n_s_or_zero) {
  std::vector<std::string> out;
  for (int nt : {4, 8, 16, 32}) {
    const int ns = n_s_or_zero == 0 ? nt : n_s_or_zero;
    out.push_back(render_count(addition_count(m, nt, ns)));
  }
  return out;
}

using Row = std::vector<std::string>;

TEST(Complexity, BpskGroupsOfTwoAndFour) {
  EXPECT_EQ(row(2, 2), (Row{"32", "64", "128", "256"}));
  EXPECT_EQ(row(2, 4), (Row{"256", "512", "1024", "2048"}));
  EXPECT_EQ(row(2, 0), (Row{"256", "65536", "4.2950e+009", "1.8447e+019"}));
}

TEST(Complexity, QpskGroups) {
  EXPECT_EQ(row(4, 2), (Row{"512", "1024", "2048", "4096"}));
  EXPECT_EQ(row(4, 4), (Row{"65536", "131072", "262144", "524288"}));
  EXPECT_EQ(row(4, 0), (Row{"65536", "4.2950e+009", "1.8447e+019", "3.4028e+038"}));
}

TEST(Complexity, QamFullSearch) {
  EXPECT_EQ(row(16, 0), (Row{"4.2950e+009", "1.8447e+019", "3.4028e+038", "1.1579e+077"}));
}

TEST(Complexity, FullGroupEqualsCompleteSearch) {
  for (int m : {2, 4, 16, 64})
    for (int nt : {1, 2, 4, 8, 16, 32}) EXPECT_EQ(addition_count(m, nt, nt), complete_count(m, nt));
}

TEST(Complexity, ExactValues) {
  EXPECT_EQ(complete_count(2, 32).str(), "18446744073709551616");
  EXPECT_EQ(addition_count(4, 8, 2), BigInt(4 * 256));  // 4 groups of 4^4
}

TEST(Complexity, ScientificRounding) {
  EXPECT_EQ(scientific(BigInt(4294967296ULL)), "4.2950e+009");
  EXPECT_EQ(scientific(BigInt(99999)), "9.9999e+004");
  EXPECT_EQ(scientific(BigInt(999996)), "1.0000e+006");  // carry into the exponent
  EXPECT_EQ(scientific(BigInt(123454)), "1.2345e+005");
  EXPECT_EQ(scientific(BigInt(123), 2), "1.23e+002");
  EXPECT_EQ(scientific(BigInt(0)), "0.0000e+000");
  EXPECT_EQ(render_count(BigInt(9999999)), "9999999");
  EXPECT_EQ(render_count(BigInt(10000000)), "1.0000e+007");
}

TEST(Complexity, ArgumentChecks) {
  EXPECT_THROW(addition_count(4, 6, 4), std::invalid_argument);
  EXPECT_THROW(addition_count(4, 4, 0), std::invalid_argument);
  EXPECT_THROW(addition_count(1, 4, 2), std::invalid_argument);
  EXPECT_THROW(complete_count(4, 0), std::invalid_argument);
}

}  // namespace
}  // namespace fap
