#include <cmath>

#include <gtest/gtest.h>

#include "support/synthetic.hpp"
#include "xmodal/error.hpp"
#include "xmodal/trainer.hpp"

namespace xmodal {
namespace {

CorpusSplits aligned_splits(std::size_t n, std::size_t dim, std::uint64_t seed) {
  return split_corpus(testing::aligned_corpus(n, dim, seed), SplitSpec{{0.8, 0.1, 0.1}, seed});
}

TEST(ScheduleTest, DecayValues) {
  const double base = 5e-5;
  EXPECT_DOUBLE_EQ(scheduled_learning_rate(base, 0), base / 2.0);
  EXPECT_DOUBLE_EQ(scheduled_learning_rate(base, 2), base / 3.0);
  EXPECT_DOUBLE_EQ(scheduled_learning_rate(base, 4), base / 5.0);
  for (std::size_t c = 1; c < 30; ++c) {
    EXPECT_LT(scheduled_learning_rate(base, c), scheduled_learning_rate(base, c - 1));
  }
}

TEST(EarlyStoppingTest, ConstantLossStopsAfterPatience) {
  EarlyStopping stopper(5, 0.01);
  std::size_t epoch = 0;
  while (!stopper.observe(1.0)) ++epoch;
  EXPECT_EQ(epoch, 5u);
  EXPECT_EQ(stopper.best_epoch(), 0u);
}

TEST(EarlyStoppingTest, ImprovementResetsPatience) {
  EarlyStopping stopper(2, 0.01);
  EXPECT_FALSE(stopper.observe(1.0));
  EXPECT_FALSE(stopper.observe(0.999));  // stale 1
  EXPECT_FALSE(stopper.observe(0.9));    // reset
  EXPECT_FALSE(stopper.observe(0.95));   // stale 1, worse
  EXPECT_TRUE(stopper.observe(0.95));    // stale 2
  EXPECT_EQ(stopper.best_epoch(), 2u);
  EXPECT_DOUBLE_EQ(stopper.best_loss(), 0.9);
}

TEST(TrainConfigTest, Validation) {
  TrainConfig config;
  EXPECT_NO_THROW(config.validate());
  config.base_lr = 0.0;
  EXPECT_THROW(config.validate(), Error);
  config = TrainConfig{};
  config.early_stop_patience = 0;
  EXPECT_THROW(config.validate(), Error);
  config = TrainConfig{};
  config.adam_beta2 = 1.0;
  EXPECT_THROW(config.validate(), Error);
}

TEST(TrainTest, RecordsScheduleAndIsReproducible) {
  auto splits = aligned_splits(60, 6, 1);
  TrainConfig config;
  config.max_epochs = 4;
  config.batch_size = 16;
  config.base_lr = 1e-3;
  auto a = train(splits.train, splits.validation, config, {8});
  auto b = train(splits.train, splits.validation, config, {8});
  ASSERT_EQ(a.history.epochs.size(), 4u);
  for (const auto& e : a.history.epochs) {
    EXPECT_EQ(e.learning_rate, scheduled_learning_rate(config.base_lr, e.epoch));
  }
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(history_csv(a.history), history_csv(b.history));
  EXPECT_LE(a.history.best_epoch, a.history.stopped_epoch);
  EXPECT_EQ(a.history.best_val_loss, a.history.epochs[a.history.best_epoch].val_loss);
}

TEST(TrainTest, ConstantValidationLossStopsAtEpochFive) {
  auto splits = aligned_splits(40, 4, 2);
  TrainConfig config;
  config.base_lr = 1e-300;
  config.batch_size = 8;
  auto result = train(splits.train, splits.validation, config, {6});
  EXPECT_TRUE(result.history.early_stopped);
  EXPECT_EQ(result.history.stopped_epoch, 5u);
  EXPECT_EQ(result.history.best_epoch, 0u);
  EXPECT_EQ(result.history.epochs.size(), 6u);
}

TEST(TrainTest, ContrastiveTrainingReducesLoss) {
  auto splits = aligned_splits(128, 8, 3);
  TrainConfig config;
  config.base_lr = 1e-2;
  config.batch_size = 16;
  config.max_epochs = 30;
  auto result = train(splits.train, splits.validation, config, {32});
  EXPECT_LT(result.history.final_train_loss, result.history.initial_train_loss);
}

TEST(TrainTest, MseTrainingReducesLoss) {
  auto splits = aligned_splits(128, 8, 4);
  TrainConfig config;
  config.loss = LossKind::kMse;
  config.base_lr = 1e-2;
  config.batch_size = 16;
  config.max_epochs = 20;
  auto result = train(splits.train, splits.validation, config, {32});
  EXPECT_LT(result.history.final_train_loss, result.history.initial_train_loss);
  EXPECT_EQ(result.model.loss, LossKind::kMse);
}

TEST(TrainTest, FullDatasetMode) {
  auto splits = aligned_splits(50, 4, 5);
  TrainConfig config;
  config.negative_mode = NegativeMode::kFullDataset;
  config.max_epochs = 3;
  config.batch_size = 10;
  config.base_lr = 1e-3;
  auto result = train(splits.train, splits.validation, config, {6});
  // Full-dataset validation loss is the exact dataset objective.
  EXPECT_NEAR(result.history.best_val_loss,
              dataset_loss(result.model, splits.validation.text, splits.validation.image),
              1e-12);
}

TEST(TrainTest, Errors) {
  auto splits = aligned_splits(30, 4, 6);
  TrainConfig config;
  config.max_epochs = 1;
  EXPECT_THROW(train(splits.train, splits.validation, config, {}), Error);

  auto big = testing::aligned_corpus(kFullDatasetLimit + 1, 4, 7);
  config.negative_mode = NegativeMode::kFullDataset;
  try {
    train(big, splits.validation, config, {2});
    FAIL() << "expected too_large";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooLarge);
  }

  auto many = testing::multi_caption_corpus(10, 2, 4, 1);
  config.negative_mode = NegativeMode::kInBatch;
  EXPECT_THROW(train(many, splits.validation, config, {2}), Error);
}

TEST(SearchTest, SampledArchitecturesStayInSpace) {
  SearchSpace space;
  auto archs = sample_architectures(space, 50, 3);
  ASSERT_EQ(archs.size(), 50u);
  for (const auto& a : archs) {
    EXPECT_GE(a.size(), 1u);
    EXPECT_LE(a.size(), 5u);
    for (auto w : a) {
      EXPECT_GE(w, 100u);
      EXPECT_LE(w, 1100u);
      EXPECT_EQ(w % 100, 0u);
    }
  }
  EXPECT_EQ(archs, sample_architectures(space, 50, 3));
  EXPECT_NE(archs, sample_architectures(space, 50, 4));
}

TEST(SearchTest, FixedArchitectureBudgetOne) {
  auto splits = aligned_splits(30, 4, 8);
  SearchSpace space;
  space.fixed = {{700, 100, 700}};
  TrainConfig config;
  config.max_epochs = 1;
  config.batch_size = 8;
  auto result = search_architectures(space, 1, splits.train, splits.validation, config);
  ASSERT_EQ(result.trials.size(), 1u);
  EXPECT_EQ(result.best().hidden_sizes, (std::vector<std::size_t>{700, 100, 700}));
  EXPECT_EQ(result.model.hidden_sizes(), (std::vector<std::size_t>{700, 100, 700}));
}

TEST(SearchTest, DeterministicCandidates) {
  auto splits = aligned_splits(30, 4, 9);
  SearchSpace space;
  space.widths = {100, 200};
  space.max_depth = 2;
  TrainConfig config;
  config.max_epochs = 1;
  config.batch_size = 8;
  config.seed = 17;
  auto a = search_architectures(space, 3, splits.train, splits.validation, config);
  auto b = search_architectures(space, 3, splits.train, splits.validation, config);
  ASSERT_EQ(a.trials.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.trials[i].hidden_sizes, b.trials[i].hidden_sizes);
    EXPECT_EQ(a.trials[i].val_loss, b.trials[i].val_loss);
  }
}

TEST(SearchTest, SingleArchitectureReturnsMinimumOverSeededRuns) {
  auto splits = aligned_splits(40, 4, 10);
  SearchSpace space;
  space.fixed = {{12}};
  TrainConfig config;
  config.max_epochs = 3;
  config.batch_size = 8;
  config.base_lr = 1e-3;
  config.seed = 5;
  auto result = search_architectures(space, 5, splits.train, splits.validation, config);
  double expected = std::numeric_limits<double>::infinity();
  for (std::uint64_t i = 0; i < 5; ++i) {
    TrainConfig run = config;
    run.seed = config.seed + i;
    expected =
        std::min(expected, train(splits.train, splits.validation, run, {12}).history.best_val_loss);
  }
  EXPECT_EQ(result.best().val_loss, expected);
  EXPECT_EQ(result.history.best_val_loss, expected);
}

}  // namespace
}  // namespace xmodal
