#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "support/synthetic.hpp"
#include "xmodal/error.hpp"
#include "xmodal/metrics.hpp"
#include "xmodal/rng.hpp"

namespace xmodal {
namespace {

double s(Metric m, std::vector<double> p, std::vector<double> q) {
  return score(m, std::span<const double>(p), std::span<const double>(q));
}

TEST(ScoreTest, HandComputedValues) {
  EXPECT_NEAR(s(Metric::kCosine, {1, 0}, {0, 1}), 0.0, 1e-12);
  EXPECT_NEAR(s(Metric::kCosine, {0.3, -2.5, 7}, {0.3, -2.5, 7}), 1.0, 1e-12);
  EXPECT_NEAR(s(Metric::kCosine, {1, 2}, {2, 1}), 0.8, 1e-12);
  EXPECT_NEAR(s(Metric::kEuclidean, {0, 0}, {3, 4}), 5.0, 1e-12);
  EXPECT_NEAR(s(Metric::kManhattan, {1, 2}, {4, 6}), 7.0, 1e-12);
  EXPECT_NEAR(s(Metric::kChiSquare, {1, 1}, {1, 3}), 0.5, 1e-12);
}

TEST(ScoreTest, ChiSquareOnSignedInputs) {
  // 0.5 * ((1 - (-1))^2 / 0 skipped + (2 - (-3))^2 / (-1)) = -12.5
  EXPECT_DOUBLE_EQ(s(Metric::kChiSquare, {1, 2}, {-1, -3}), -12.5);
  EXPECT_DOUBLE_EQ(s(Metric::kChiSquare, {0, 0}, {0, 0}), 0.0);
}

TEST(ScoreTest, FloatAndDoubleAgree) {
  std::vector<float> pf{0.25f, -1.5f, 3.0f};
  std::vector<float> qf{2.0f, 0.5f, -0.75f};
  std::vector<double> pd(pf.begin(), pf.end()), qd(qf.begin(), qf.end());
  for (auto m : kAllMetrics) {
    EXPECT_EQ(score(m, std::span<const float>(pf), std::span<const float>(qf)),
              score(m, std::span<const double>(pd), std::span<const double>(qd)));
  }
}

TEST(ScoreTest, Errors) {
  EXPECT_THROW(s(Metric::kEuclidean, {1, 2}, {1}), Error);
  EXPECT_THROW(s(Metric::kCosine, {0, 0}, {1, 1}), Error);
  EXPECT_THROW(s(Metric::kManhattan, {}, {}), Error);
}

TEST(ScoreTest, CosineStaysInRange) {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> p(5), q(5);
    for (auto& x : p) x = rng.normal();
    q = p;
    for (auto& x : q) x *= 3.7;
    const double c = s(Metric::kCosine, p, q);
    EXPECT_LE(c, 1.0);
    EXPECT_GE(c, -1.0);
  }
}

TEST(MetricPropertyTest, SymmetryAndTriangleInequality) {
  Rng rng(2024);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng.uniform_index(16);
    std::vector<double> p(n), q(n), r(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = rng.normal();
      q[i] = rng.normal();
      r[i] = rng.normal();
    }
    for (auto m : kAllMetrics) EXPECT_EQ(s(m, p, q), s(m, q, p));
    for (auto m : {Metric::kEuclidean, Metric::kManhattan}) {
      EXPECT_LE(s(m, p, r), s(m, p, q) + s(m, q, r) + 1e-6);
      EXPECT_NEAR(s(m, p, p), 0.0, 1e-6);
      EXPECT_GT(s(m, p, q), 0.0);
    }
  }
}

TEST(MetricPropertyTest, CosineRankingIsScaleInvariant) {
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> query(8);
    for (auto& x : query) x = rng.normal();
    std::vector<std::vector<double>> cands(20, std::vector<double>(8));
    for (auto& c : cands) for (auto& x : c) x = rng.normal();
    const double scale = rng.uniform(0.01, 100.0);
    auto order_for = [&](double c) {
      std::vector<double> scores;
      for (auto cand : cands) {
        for (auto& x : cand) x *= c;
        scores.push_back(s(Metric::kCosine, query, cand));
      }
      std::vector<std::size_t> order(scores.size());
      std::iota(order.begin(), order.end(), 0u);
      std::stable_sort(order.begin(), order.end(),
                       [&](auto a, auto b) { return scores[a] > scores[b]; });
      return order;
    };
    EXPECT_EQ(order_for(1.0), order_for(scale));
  }
}

TEST(ScoreMatrixTest, CosineSelfDiagonalIsOne) {
  auto set = testing::make_set(Modality::kText, 6, testing::random_gaussian_rows(12, 6, 4), "x");
  auto m = score_matrix(Metric::kCosine, set, set);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(m.at(i, i), 1.0, 1e-12);
  EXPECT_EQ(m.orientation, Orientation::kSimilarity);
}

TEST(ScoreMatrixTest, EuclideanIdentityRows) {
  EmbeddingSet a(Modality::kText, 2, {"e0", "e1"}, {1, 0, 0, 1});
  auto m = score_matrix(Metric::kEuclidean, a, a);
  EXPECT_DOUBLE_EQ(m.at(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(m.at(0, 1), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(m.at(1, 0), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(m.at(1, 1), 0.0);
  EXPECT_EQ(m.row_ids, a.ids());
}

TEST(ScoreMatrixTest, TransposeAndElementwiseConsistency) {
  auto a = testing::make_set(Modality::kText, 5, testing::random_gaussian_rows(7, 5, 1), "a");
  auto b = testing::make_set(Modality::kImage, 5, testing::random_gaussian_rows(9, 5, 2), "b");
  for (auto metric : kAllMetrics) {
    auto ab = score_matrix(metric, a, b);
    auto ba = score_matrix(metric, b, a);
    for (std::size_t i = 0; i < 7; ++i) {
      for (std::size_t j = 0; j < 9; ++j) {
        EXPECT_EQ(ab.at(i, j), ba.at(j, i));
        EXPECT_EQ(ab.at(i, j), score(metric, a.row(i), b.row(j)));
      }
    }
  }
}

TEST(ScoreMatrixTest, Errors) {
  EmbeddingSet a(Modality::kText, 2, {"ok", "zero"}, {1, 0, 0, 0});
  EmbeddingSet b(Modality::kImage, 3, {"b"}, {1, 0, 0});
  EXPECT_THROW(score_matrix(Metric::kEuclidean, a, b), Error);
  try {
    score_matrix(Metric::kCosine, a, a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroNorm);
    EXPECT_NE(std::string(e.what()).find("'zero'"), std::string::npos);
  }
  // Other metrics accept zero rows.
  EXPECT_NO_THROW(score_matrix(Metric::kManhattan, a, a));
}

TEST(MetricNameTest, RoundTrip) {
  for (auto m : kAllMetrics) EXPECT_EQ(parse_metric(metric_name(m)), m);
  EXPECT_FALSE(parse_metric("hamming").has_value());
}

}  // namespace
}  // namespace xmodal
