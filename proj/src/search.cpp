#include "xmodal/error.hpp"
#include "xmodal/parallel.hpp"
#include "xmodal/rng.hpp"
#include "xmodal/trainer.hpp"

namespace xmodal {

std::vector<std::vector<std::size_t>> sample_architectures(const SearchSpace& space,
                                                           std::size_t budget,
                                                           std::uint64_t seed) {
  if (budget < 1) throw Error(ErrorCode::kInvalidArgument, "search budget must be >= 1");
  std::vector<std::vector<std::size_t>> out;
  if (!space.fixed.empty()) {
    for (std::size_t i = 0; i < budget; ++i) out.push_back(space.fixed[i % space.fixed.size()]);
    return out;
  }
  if (space.min_depth < 1 || space.max_depth > 5 || space.min_depth > space.max_depth ||
      space.widths.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "search space needs depth within [1, 5] and widths");
  }
  Rng rng(seed);
  for (std::size_t i = 0; i < budget; ++i) {
    const auto depth =
        space.min_depth + rng.uniform_index(space.max_depth - space.min_depth + 1);
    std::vector<std::size_t> arch(depth);
    for (auto& w : arch) w = space.widths[rng.uniform_index(space.widths.size())];
    out.push_back(std::move(arch));
  }
  return out;
}

SearchResult search_architectures(const SearchSpace& space, std::size_t budget,
                                  const PairedCorpus& train_split,
                                  const PairedCorpus& validation_split, const TrainConfig& config) {
  const auto archs = sample_architectures(space, budget, config.seed);
  std::vector<TrainResult> results(archs.size());
  // Trials share no mutable state; each one trains single-threaded.
  parallel_for(archs.size(), [&](std::size_t i) {
    TrainConfig trial_config = config;
    trial_config.seed = config.seed + i;
    results[i] = train(train_split, validation_split, trial_config, archs[i]);
  });

  SearchResult out;
  for (std::size_t i = 0; i < archs.size(); ++i) {
    out.trials.push_back(SearchTrial{archs[i], config.seed + i, results[i].history.best_val_loss,
                                     results[i].history.stopped_epoch});
    if (results[i].history.best_val_loss < results[out.best_trial].history.best_val_loss) {
      out.best_trial = i;
    }
  }
  out.model = std::move(results[out.best_trial].model);
  out.history = std::move(results[out.best_trial].history);
  return out;
}

}  // namespace xmodal
