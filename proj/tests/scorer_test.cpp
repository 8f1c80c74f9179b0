#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <numeric>

#include <gtest/gtest.h>

#include "support/synthetic.hpp"
#include "xmodal/error.hpp"
#include "xmodal/objective.hpp"
#include "xmodal/scorer.hpp"

namespace xmodal {
namespace {

ScorerModel random_model(std::size_t text_dim, std::size_t image_dim,
                         std::vector<std::size_t> hidden, std::uint64_t seed) {
  auto model = ScorerModel::initialized(text_dim, image_dim, std::move(hidden), seed);
  // Non-zero biases so every parameter group is exercised.
  auto params = model.parameters();
  Rng rng(seed + 7);
  for (auto& p : params) p += 0.05 * rng.normal();
  model.set_parameters(params);
  return model;
}

TEST(ForwardTest, ZeroModelIsZero) {
  ScorerModel model(3, 2, {4, 4});
  const std::vector<float> x{1, -2, 3}, y{0.5f, 7};
  EXPECT_EQ(model.forward(std::span<const float>(x), std::span<const float>(y)), 0.0);
}

TEST(ForwardTest, HandBuiltUnitWeights) {
  ScorerModel model(2, 2, {1});
  auto& layers = model.layers();
  std::fill(layers[0].weights.begin(), layers[0].weights.end(), 1.0);
  layers[1].weights = {1.0};
  const std::vector<float> x{0.25f, 0.25f}, y{0.125f, 0.375f};
  const double out = model.forward(std::span<const float>(x), std::span<const float>(y));
  EXPECT_NEAR(out, 0.761594, 1e-6);
  EXPECT_DOUBLE_EQ(out, std::tanh(1.0));
}

TEST(ForwardTest, ReluClipsNegativeHidden) {
  ScorerModel model(1, 1, {1});
  auto& layers = model.layers();
  layers[0].weights = {1.0, 1.0};
  layers[0].biases = {-5.0};
  layers[1].weights = {1.0};
  layers[1].biases = {0.25};
  const std::vector<double> x{1.0}, y{1.0};
  EXPECT_DOUBLE_EQ(model.forward(std::span<const double>(x), std::span<const double>(y)),
                   std::tanh(0.25));
}

TEST(ForwardTest, OutputStrictlyInsideUnitInterval) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto model = random_model(8, 8, {16, 8}, seed);
    auto rows = testing::random_gaussian_rows(10, 16, seed, 3.0);
    for (std::size_t r = 0; r < 10; ++r) {
      std::span<const float> row(rows.data() + r * 16, 16);
      const double out = model.forward(row.first(8), row.last(8));
      EXPECT_LT(std::abs(out), 1.0);
    }
  }
}

TEST(ForwardTest, DimensionMismatch) {
  ScorerModel model(3, 2, {4});
  const std::vector<float> x{1, 2}, y{1, 2};
  EXPECT_THROW(model.forward(std::span<const float>(x), std::span<const float>(y)), Error);
  EXPECT_THROW(ScorerModel(3, 2, {}), Error);
  EXPECT_THROW(ScorerModel(3, 2, {1, 2, 3, 4, 5, 6}), Error);
  EXPECT_THROW(ScorerModel(3, 2, {4, 0}), Error);
}

TEST(ForwardTest, ConcatenatedAndSplitInputsAgree) {
  auto model = random_model(5, 3, {7}, 3);
  const std::vector<double> x{0.1, -0.2, 0.3, 0.4, -0.5}, y{1.0, 0.5, -0.25};
  std::vector<double> cat(x);
  cat.insert(cat.end(), y.begin(), y.end());
  EXPECT_EQ(model.forward(std::span<const double>(x), std::span<const double>(y)),
            model.forward(std::span<const double>(cat)));
}

TEST(ModelTest, InitializationBoundsAndShape) {
  auto model = ScorerModel::initialized(6, 4, {5, 3}, 11);
  ASSERT_EQ(model.layers().size(), 3u);
  EXPECT_EQ(model.layers()[0].in, 10u);
  EXPECT_EQ(model.layers()[1].in, 5u);
  EXPECT_EQ(model.layers()[2].out, 1u);
  EXPECT_EQ(model.parameter_count(), 10u * 5 + 5 + 5 * 3 + 3 + 3 + 1);
  for (const auto& layer : model.layers()) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    for (auto w : layer.weights) EXPECT_LE(std::abs(w), limit);
    for (auto b : layer.biases) EXPECT_EQ(b, 0.0);
  }
  EXPECT_EQ(model, ScorerModel::initialized(6, 4, {5, 3}, 11));
  EXPECT_NE(model, ScorerModel::initialized(6, 4, {5, 3}, 12));
}

TEST(ContrastiveTest, Values) {
  EXPECT_EQ(contrastive_pair_loss(1.0, true), 0.0);
  EXPECT_EQ(contrastive_pair_loss(-1.0, false), 0.0);
  EXPECT_DOUBLE_EQ(contrastive_pair_loss(0.0, true), 0.5);
  EXPECT_DOUBLE_EQ(contrastive_pair_loss(0.5, false), 1.125);
  for (double d = -1.0; d <= 1.0; d += 0.125) {
    EXPECT_GE(contrastive_pair_loss(d, true), 0.0);
    EXPECT_GE(contrastive_pair_loss(d, false), 0.0);
  }
}

TEST(PerQueryLossTest, Values) {
  const std::vector<double> one{1.0};
  EXPECT_EQ(per_query_loss(one, 0), 0.0);
  const std::vector<double> two{1.0, -1.0};
  EXPECT_EQ(per_query_loss(two, 0), 0.0);
  const std::vector<double> three{0.5, 0.0, -0.5};
  EXPECT_DOUBLE_EQ(per_query_loss(three, 0), 0.25);
  EXPECT_THROW(per_query_loss(three, 3), Error);
}

TEST(PerQueryLossTest, ModelOverloadMatchesScores) {
  auto model = random_model(3, 3, {4}, 5);
  auto rows = testing::random_unit_rows(4, 3, 1);
  std::span<const float> all(rows);
  std::vector<std::span<const float>> candidates;
  std::vector<double> scores;
  for (std::size_t r = 1; r < 4; ++r) {
    candidates.push_back(all.subspan(r * 3, 3));
    scores.push_back(model.forward(all.first(3), candidates.back()));
  }
  EXPECT_EQ(per_query_loss(model, all.first(3), candidates, 1), per_query_loss(scores, 1));
}

TEST(DatasetLossTest, ZeroModelGivesHalf) {
  for (std::size_t n : {1u, 10u, 100u}) {
    auto corpus = testing::random_corpus(n, 4, n);
    ScorerModel model(4, 4, {3});
    EXPECT_NEAR(dataset_loss(model, corpus.text, corpus.image), 0.5, 1e-12);
    EXPECT_NEAR(dataset_loss(model, corpus.text, corpus.image, LossSide::kText), 0.5, 1e-12);
  }
}

TEST(DatasetLossTest, PerfectTwoByTwo) {
  const std::vector<double> d{1, -1, -1, 1};
  auto loss = dataset_loss_from_scores(d, 2);
  EXPECT_EQ(loss.text_side, 0.0);
  EXPECT_EQ(loss.image_side, 0.0);
}

TEST(DatasetLossTest, SingleItemEqualsPerQuery) {
  auto corpus = testing::random_corpus(1, 4, 9);
  auto model = random_model(4, 4, {5}, 9);
  const double d = model.forward(corpus.text.row(0), corpus.image.row(0));
  EXPECT_DOUBLE_EQ(dataset_loss(model, corpus.text, corpus.image, LossSide::kText),
                   contrastive_pair_loss(d, true));
}

TEST(DatasetLossTest, BothSidesAgree) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t n = 2 + seed;
    Rng rng(seed);
    std::vector<double> d(n * n);
    for (auto& v : d) v = rng.uniform(-1.0, 1.0);
    auto loss = dataset_loss_from_scores(d, n);
    EXPECT_NEAR(loss.text_side, loss.image_side, 1e-12);

    double manual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) manual += contrastive_pair_loss(d[i * n + j], i == j);
    }
    EXPECT_NEAR(loss.text_side, manual / static_cast<double>(n * n), 1e-12);
  }
}

TEST(MseLossTest, Values) {
  ScorerModel model(2, 2, {2});
  const std::vector<float> x{1, 0}, y{0, 1};
  std::vector<MseSample> batch{{x, y, 0.0}};
  EXPECT_EQ(mse_loss(model, batch), 0.0);
  batch[0].target = 1.0;
  EXPECT_EQ(mse_loss(model, batch), 1.0);
  std::vector<MseSample> two{{x, y, -0.1}, {x, y, 0.3}};
  EXPECT_NEAR(mse_loss(model, two), 0.05, 1e-15);
}

TEST(ScoreMatrixTest, CachedProjectionsMatchForward) {
  auto corpus = testing::random_corpus(12, 5, 3);
  auto model = random_model(5, 5, {6, 4}, 3);
  auto m = score_matrix(model, corpus.text, corpus.image);
  ASSERT_EQ(m.rows, 12u);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      EXPECT_EQ(m.at(i, j), model.forward(corpus.text.row(i), corpus.image.row(j)));
    }
  }
  EXPECT_EQ(m.orientation, Orientation::kSimilarity);
}

TEST(SerializationTest, RoundTripIsBitExact) {
  auto model = random_model(6, 4, {9, 7, 5}, 21);
  model.seed = 21;
  model.loss = LossKind::kMse;
  const auto decoded = decode_model(encode_model(model));
  EXPECT_EQ(decoded, model);

  const auto path = std::filesystem::temp_directory_path() / "xmodal_scorer_roundtrip.json";
  save_model(model, path);
  const auto loaded = load_model(path);
  std::filesystem::remove(path);
  auto rows = testing::random_gaussian_rows(30, 10, 4);
  for (std::size_t r = 0; r < 30; ++r) {
    std::span<const float> row(rows.data() + r * 10, 10);
    const double a = model.forward(row.first(6), row.last(4));
    const double b = loaded.forward(row.first(6), row.last(4));
    EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0);
  }
}

TEST(SerializationTest, RejectsMalformed) {
  EXPECT_THROW(decode_model("not json"), Error);
  EXPECT_THROW(decode_model(R"({"format":"other","version":1})"), Error);
  EXPECT_THROW(load_model("/nonexistent/xmodal/model.json"), Error);
}

TEST(LossNameTest, RoundTrip) {
  for (auto l : {LossKind::kMse, LossKind::kContrastive}) EXPECT_EQ(parse_loss(loss_name(l)), l);
  EXPECT_THROW(parse_loss("hinge"), Error);
}

TEST(BlockObjectiveTest, InBatchMatchesDatasetLoss) {
  auto corpus = testing::random_corpus(9, 4, 2);
  auto model = random_model(4, 4, {5}, 2);
  std::vector<std::size_t> rows(9);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const auto block = PairBlock::in_batch(rows, rows);
  EXPECT_NEAR(block_objective(model, corpus.text, corpus.image, block, LossKind::kContrastive),
              dataset_loss(model, corpus.text, corpus.image), 1e-12);
}

TEST(GradientCheckTest, ZeroModelMse) {
  auto corpus = testing::random_corpus(6, 4, 8);
  ScorerModel model(4, 4, {10, 6});
  std::vector<std::size_t> rows{0, 1, 2, 3, 4, 5};
  const auto block = PairBlock::in_batch(rows, rows);
  auto result = gradient_check(model, corpus.text, corpus.image, block, LossKind::kMse);
  EXPECT_GE(result.checked, 100u);
  EXPECT_LT(result.max_relative_error, 1e-4);
}

TEST(GradientCheckTest, RandomModelsBothLosses) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto corpus = testing::random_corpus(6, 4, seed);
    auto model = random_model(4, 4, {10, 6}, seed);
    std::vector<std::size_t> rows{0, 1, 2, 3, 4, 5};
    const auto block = PairBlock::in_batch(rows, rows);
    for (auto loss : {LossKind::kMse, LossKind::kContrastive}) {
      GradientCheckOptions options;
      options.seed = seed;
      auto result = gradient_check(model, corpus.text, corpus.image, block, loss, options);
      EXPECT_GE(result.checked, 100u);
      EXPECT_LT(result.max_relative_error, 1e-4) << "seed " << seed << " loss " << loss_name(loss);
    }
  }
}

TEST(GradientCheckTest, DetectsCorruptedGradient) {
  auto corpus = testing::random_corpus(6, 4, 1);
  auto model = random_model(4, 4, {10, 6}, 1);
  std::vector<std::size_t> rows{0, 1, 2, 3, 4, 5};
  const auto block = PairBlock::in_batch(rows, rows);
  std::vector<double> grad;
  block_objective(model, corpus.text, corpus.image, block, LossKind::kContrastive, &grad);
  std::size_t largest = 0;
  for (std::size_t p = 1; p < grad.size(); ++p) {
    if (std::abs(grad[p]) > std::abs(grad[largest])) largest = p;
  }
  GradientCheckOptions options;
  options.corrupt_parameter = largest;
  auto result =
      gradient_check(model, corpus.text, corpus.image, block, LossKind::kContrastive, options);
  EXPECT_GT(result.max_relative_error, 0.5);
  EXPECT_EQ(result.worst_parameter, largest);
}

TEST(BlockObjectiveTest, FullRowBlockWithOffDiagonalPositives) {
  // Rectangular block: 2 texts against 3 images.
  auto corpus = testing::random_corpus(3, 4, 6);
  auto model = random_model(4, 4, {5}, 6);
  PairBlock block{{0, 2}, {0, 1, 2}, {1, 0, 0, 0, 0, 1}};
  double manual = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      const double d = model.forward(corpus.text.row(block.text_rows[i]), corpus.image.row(j));
      manual += contrastive_pair_loss(d, block.positive[i * 3 + j] != 0);
    }
  }
  EXPECT_NEAR(block_objective(model, corpus.text, corpus.image, block, LossKind::kContrastive),
              manual / 6.0, 1e-12);
  auto result = gradient_check(model, corpus.text, corpus.image, block, LossKind::kContrastive);
  EXPECT_LT(result.max_relative_error, 1e-4);
}

}  // namespace
}  // namespace xmodal
