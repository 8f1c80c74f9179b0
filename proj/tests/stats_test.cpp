#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "xmodal/rng.hpp"
#include "xmodal/stats.hpp"

namespace xmodal {
namespace {

TEST(ChiSquareTest, IdenticalProportions) {
  auto r = two_proportion_chisq({5, 10, "a"}, {5, 10, "b"});
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
  auto all = two_proportion_chisq({10, 10, "a"}, {10, 10, "b"});
  EXPECT_EQ(all.statistic, 0.0);
  EXPECT_EQ(all.p_value, 1.0);
}

TEST(ChiSquareTest, CompleteSeparation) {
  auto r = two_proportion_chisq({10, 10, "a"}, {0, 10, "b"});
  EXPECT_NEAR(r.statistic, 20.0, 1e-12);
  EXPECT_NEAR(r.p_value, testing::chi_square1_sf(20.0), 1e-8);
  EXPECT_NEAR(r.p_value, 7.74e-6, 5e-9);
}

TEST(ChiSquareTest, HandContingencyTable) {
  // 844/1000 vs 770/1000: pooled 0.807.
  const double a = 844, b = 156, c = 770, d = 230, n = 2000;
  const double expected = n * (a * d - b * c) * (a * d - b * c) /
                          ((a + b) * (c + d) * (a + c) * (b + d));
  auto r = two_proportion_chisq({844, 1000, "clip"}, {770, 1000, "blip"});
  EXPECT_NEAR(r.statistic, expected, 1e-9);
  EXPECT_NEAR(r.p_value, testing::chi_square1_sf(expected), 1e-8);
  EXPECT_LT(r.p_value, 1e-4);
}

TEST(ChiSquareTest, Symmetric) {
  auto ab = two_proportion_chisq({30, 80, "a"}, {45, 90, "b"});
  auto ba = two_proportion_chisq({45, 90, "b"}, {30, 80, "a"});
  EXPECT_DOUBLE_EQ(ab.statistic, ba.statistic);
  EXPECT_DOUBLE_EQ(ab.p_value, ba.p_value);
}

TEST(ChiSquareTest, InvalidSamples) {
  EXPECT_ANY_THROW(two_proportion_chisq({1, 0, "a"}, {1, 2, "b"}));
  EXPECT_ANY_THROW(two_proportion_chisq({3, 2, "a"}, {1, 2, "b"}));
}

TEST(SurvivalTest, MatchesClosedFormsOneAndTwoDof) {
  for (double x : {0.5, 1.0, 2.0, 5.0, 10.0, 20.0}) {
    EXPECT_NEAR(chi_square_sf(x, 1.0), testing::chi_square1_sf(x), 1e-8) << x;
    EXPECT_NEAR(chi_square_sf(x, 2.0), testing::chi_square2_sf(x), 1e-8) << x;
  }
  EXPECT_EQ(chi_square_sf(0.0, 1.0), 1.0);
}

TEST(SurvivalTest, ComplementaryGammaFunctions) {
  for (double a : {0.5, 1.0, 3.5, 10.0}) {
    for (double x : {0.1, 1.0, 4.0, 12.0, 40.0}) {
      EXPECT_NEAR(regularized_gamma_p(a, x) + regularized_gamma_q(a, x), 1.0, 1e-12);
    }
  }
  // P(1, x) = 1 - exp(-x).
  EXPECT_NEAR(regularized_gamma_p(1.0, 2.0), 1.0 - std::exp(-2.0), 1e-14);
}

TEST(HolmTest, Examples) {
  const std::vector<double> single{0.5};
  EXPECT_EQ(holm_adjust(single), single);
  const std::vector<double> three{0.01, 0.04, 0.03};
  const auto adjusted = holm_adjust(three);
  const std::vector<double> expected{0.03, 0.06, 0.06};
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(adjusted[i], expected[i], 1e-12);
  const std::vector<double> ones{1.0, 1.0};
  EXPECT_EQ(holm_adjust(ones), ones);
  EXPECT_TRUE(holm_adjust(std::vector<double>{}).empty());
}

TEST(HolmTest, PropertiesOnRandomInputs) {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + rng.uniform_index(12);
    std::vector<double> p(m);
    for (auto& v : p) v = rng.uniform01() * (rng.uniform01() < 0.5 ? 0.05 : 1.0);
    const auto adj = holm_adjust(p);
    const auto ref = testing::holm_reference(p);
    for (std::size_t i = 0; i < m; ++i) {
      EXPECT_GE(adj[i], p[i]);
      EXPECT_LE(adj[i], 1.0);
      EXPECT_NEAR(adj[i], ref[i], 1e-12);
    }
    std::vector<std::size_t> perm(m);
    for (std::size_t i = 0; i < m; ++i) perm[i] = i;
    rng.shuffle(std::span<std::size_t>(perm));
    std::vector<double> permuted(m);
    for (std::size_t i = 0; i < m; ++i) permuted[i] = p[perm[i]];
    const auto adj_permuted = holm_adjust(permuted);
    for (std::size_t i = 0; i < m; ++i) EXPECT_EQ(adj_permuted[i], adj[perm[i]]);
  }
}

}  // namespace
}  // namespace xmodal
