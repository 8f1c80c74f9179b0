#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "xmodal/corpus.hpp"
#include "xmodal/scorer.hpp"

namespace xmodal {

enum class NegativeMode { kInBatch, kFullDataset };

// Full-dataset negatives are O(N^2) per epoch and capped at this many items.
inline constexpr std::size_t kFullDatasetLimit = 2048;

struct TrainConfig {
  double base_lr = 5e-5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 100;
  std::size_t early_stop_patience = 5;
  double early_stop_min_improvement = 0.01;  // relative, vs the previous epoch
  LossKind loss = LossKind::kContrastive;
  NegativeMode negative_mode = NegativeMode::kInBatch;
  std::uint64_t seed = 0;

  void validate() const;
};

// base_lr / (1 + 2^(0.5 * epoch)), epoch counted from 0, not compounded.
double scheduled_learning_rate(double base_lr, std::size_t epoch);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double learning_rate = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t stopped_epoch = 0;
  std::size_t best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  bool early_stopped = false;
  // Training objective over the unshuffled training batches, before the
  // first update and after restoring the best weights.
  double initial_train_loss = 0.0;
  double final_train_loss = 0.0;
};

std::string history_csv(const TrainHistory& history);

// Stops once the relative improvement over the previous epoch stays below
// the threshold for `patience` consecutive epochs; tracks the best epoch.
class EarlyStopping {
 public:
  EarlyStopping(std::size_t patience, double min_relative_improvement)
      : patience_(patience), min_improvement_(min_relative_improvement) {}

  // Returns true when training should stop after this epoch.
  bool observe(double val_loss);

  bool improved_best() const { return improved_best_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }
  std::size_t epochs_seen() const { return epochs_; }

 private:
  std::size_t patience_;
  double min_improvement_;
  std::size_t epochs_ = 0;
  std::size_t stale_ = 0;
  double previous_ = 0.0;
  double best_loss_ = std::numeric_limits<double>::infinity();
  std::size_t best_epoch_ = 0;
  bool improved_best_ = false;
};

struct TrainResult {
  ScorerModel model;
  TrainHistory history;
};

// Adam with bias correction on the scheduled learning rate. The corpora must
// be one-to-one; the returned model holds the best-validation weights.
TrainResult train(const PairedCorpus& train_split, const PairedCorpus& validation_split,
                  const TrainConfig& config, const std::vector<std::size_t>& hidden_sizes);

struct SearchSpace {
  std::size_t min_depth = 1;
  std::size_t max_depth = 5;
  std::vector<std::size_t> widths{100, 200, 300, 400, 500, 600, 700, 800, 900, 1000, 1100};
  // When non-empty, candidates cycle through these instead of being sampled.
  std::vector<std::vector<std::size_t>> fixed;
};

struct SearchTrial {
  std::vector<std::size_t> hidden_sizes;
  std::uint64_t seed = 0;
  double val_loss = 0.0;
  std::size_t stopped_epoch = 0;
};

struct SearchResult {
  std::vector<SearchTrial> trials;
  std::size_t best_trial = 0;
  ScorerModel model;
  TrainHistory history;

  const SearchTrial& best() const { return trials[best_trial]; }
};

// Candidate architectures drawn from a generator seeded with config.seed.
std::vector<std::vector<std::size_t>> sample_architectures(const SearchSpace& space,
                                                           std::size_t budget,
                                                           std::uint64_t seed);

// Trains `budget` candidates (trial i uses seed config.seed + i) and keeps
// the lowest best-validation loss; ties go to the earlier trial.
SearchResult search_architectures(const SearchSpace& space, std::size_t budget,
                                  const PairedCorpus& train_split,
                                  const PairedCorpus& validation_split, const TrainConfig& config);

}  // namespace xmodal
