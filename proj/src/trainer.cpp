#include "xmodal/trainer.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "xmodal/error.hpp"
#include "xmodal/objective.hpp"
#include "xmodal/rng.hpp"

namespace xmodal {
namespace {

struct Samples {
  std::vector<std::size_t> text_rows;
  std::vector<std::size_t> image_rows;
};

Samples paired_samples(const PairedCorpus& corpus, const char* which) {
  if (corpus.relation != Relation::kOneToOne) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(which) + " split must be one-to-one (use first-caption selection)");
  }
  Samples s;
  for (std::size_t t = 0; t < corpus.text.count(); ++t) {
    const auto& rel = corpus.text_to_image.relevant(t);
    if (rel.empty()) continue;
    s.text_rows.push_back(t);
    s.image_rows.push_back(rel.front());
  }
  if (s.text_rows.empty()) {
    throw Error(ErrorCode::kEmptyInput, std::string(which) + " split has no paired samples");
  }
  return s;
}

// Builds the block for samples [begin, end) of `order`.
PairBlock make_block(const Samples& samples, std::span<const std::size_t> order,
                     NegativeMode mode) {
  std::vector<std::size_t> texts, images;
  for (auto s : order) {
    texts.push_back(samples.text_rows[s]);
    images.push_back(samples.image_rows[s]);
  }
  if (mode == NegativeMode::kInBatch) return PairBlock::in_batch(std::move(texts), std::move(images));
  PairBlock block;
  block.image_rows = samples.image_rows;
  block.positive.assign(texts.size() * block.image_rows.size(), 0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    block.positive[i * block.image_rows.size() + order[i]] = 1;
  }
  block.text_rows = std::move(texts);
  return block;
}

// Pair-weighted mean of the objective over fixed, unshuffled batches.
double evaluate_split(const ScorerModel& model, const PairedCorpus& corpus, const Samples& samples,
                      const TrainConfig& config) {
  std::vector<std::size_t> order(samples.text_rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
    const auto len = std::min(config.batch_size, order.size() - begin);
    const auto block =
        make_block(samples, std::span<const std::size_t>(order).subspan(begin, len),
                   config.negative_mode);
    total += block_objective(model, corpus.text, corpus.image, block, config.loss) *
             static_cast<double>(block.pair_count());
    pairs += block.pair_count();
  }
  return total / static_cast<double>(pairs);
}

}  // namespace

void TrainConfig::validate() const {
  if (!(base_lr > 0.0) || !(adam_eps > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "learning rate and epsilon must be positive");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "Adam betas must lie in [0, 1)");
  }
  if (batch_size < 1 || max_epochs < 1 || early_stop_patience < 1) {
    throw Error(ErrorCode::kInvalidArgument, "batch size, epochs and patience must be >= 1");
  }
}

double scheduled_learning_rate(double base_lr, std::size_t epoch) {
  return base_lr / (1.0 + std::pow(2.0, 0.5 * static_cast<double>(epoch)));
}

std::string history_csv(const TrainHistory& history) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,train_loss,val_loss,lr\n";
  for (const auto& e : history.epochs) {
    out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ',' << e.learning_rate << '\n';
  }
  return out.str();
}

bool EarlyStopping::observe(double val_loss) {
  if (epochs_ > 0) {
    // A non-positive previous loss cannot improve in relative terms.
    const double rel = previous_ > 0.0 ? (previous_ - val_loss) / previous_ : 0.0;
    stale_ = rel < min_improvement_ ? stale_ + 1 : 0;
  }
  improved_best_ = val_loss < best_loss_;
  if (improved_best_) {
    best_loss_ = val_loss;
    best_epoch_ = epochs_;
  }
  previous_ = val_loss;
  ++epochs_;
  return stale_ >= patience_;
}

TrainResult train(const PairedCorpus& train_split, const PairedCorpus& validation_split,
                  const TrainConfig& config, const std::vector<std::size_t>& hidden_sizes) {
  config.validate();
  const auto train_samples = paired_samples(train_split, "training");
  const auto val_samples = paired_samples(validation_split, "validation");
  if (train_split.text.dim() != validation_split.text.dim() ||
      train_split.image.dim() != validation_split.image.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "training and validation dims differ");
  }
  if (config.negative_mode == NegativeMode::kFullDataset &&
      std::max(train_samples.text_rows.size(), val_samples.text_rows.size()) > kFullDatasetLimit) {
    throw Error(ErrorCode::kTooLarge, "full-dataset negatives are limited to " +
                                          std::to_string(kFullDatasetLimit) + " items");
  }

  ScorerModel model = ScorerModel::initialized(train_split.text.dim(), train_split.image.dim(),
                                               hidden_sizes, config.seed);
  model.loss = config.loss;

  TrainHistory history;
  history.initial_train_loss = evaluate_split(model, train_split, train_samples, config);

  auto params = model.parameters();
  std::vector<double> m(params.size(), 0.0), v(params.size(), 0.0), grad;
  std::vector<double> best_params = params;
  double beta1_power = 1.0;
  double beta2_power = 1.0;

  // Separate stream from the weight initializer.
  Rng shuffle_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(train_samples.text_rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  EarlyStopping stopper(config.early_stop_patience, config.early_stop_min_improvement);

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    const double lr = scheduled_learning_rate(config.base_lr, epoch);
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double epoch_total = 0.0;
    std::size_t epoch_pairs = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const auto len = std::min(config.batch_size, order.size() - begin);
      const auto block =
          make_block(train_samples, std::span<const std::size_t>(order).subspan(begin, len),
                     config.negative_mode);
      const double loss =
          block_objective(model, train_split.text, train_split.image, block, config.loss, &grad);
      epoch_total += loss * static_cast<double>(block.pair_count());
      epoch_pairs += block.pair_count();

      beta1_power *= config.adam_beta1;
      beta2_power *= config.adam_beta2;
      const double c1 = 1.0 - beta1_power;
      const double c2 = 1.0 - beta2_power;
      for (std::size_t p = 0; p < params.size(); ++p) {
        m[p] = config.adam_beta1 * m[p] + (1.0 - config.adam_beta1) * grad[p];
        v[p] = config.adam_beta2 * v[p] + (1.0 - config.adam_beta2) * grad[p] * grad[p];
        const double m_hat = m[p] / c1;
        const double v_hat = v[p] / c2;
        params[p] -= lr * m_hat / (std::sqrt(v_hat) + config.adam_eps);
      }
      model.set_parameters(params);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.learning_rate = lr;
    record.train_loss = epoch_total / static_cast<double>(epoch_pairs);
    record.val_loss = evaluate_split(model, validation_split, val_samples, config);
    history.epochs.push_back(record);
    history.stopped_epoch = epoch;

    const bool stop = stopper.observe(record.val_loss);
    if (stopper.improved_best()) best_params = params;
    if (stop) {
      history.early_stopped = true;
      break;
    }
  }

  history.best_epoch = stopper.best_epoch();
  history.best_val_loss = stopper.best_loss();
  model.set_parameters(best_params);
  history.final_train_loss = evaluate_split(model, train_split, train_samples, config);
  return TrainResult{std::move(model), std::move(history)};
}

}  // namespace xmodal
