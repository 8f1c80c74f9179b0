#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "xmodal/embedding.hpp"
#include "xmodal/scorer.hpp"

namespace xmodal {

// A dense block of text x image pairs whose pair losses are averaged.
// `positive` is row-major over (text_rows, image_rows).
struct PairBlock {
  std::vector<std::size_t> text_rows;
  std::vector<std::size_t> image_rows;
  std::vector<std::uint8_t> positive;

  std::size_t pair_count() const { return text_rows.size() * image_rows.size(); }

  // Block of B paired samples with the diagonal marked positive.
  static PairBlock in_batch(std::vector<std::size_t> text_rows,
                            std::vector<std::size_t> image_rows);
};

// Mean pair loss over the block. MSE regresses onto the cosine of each pair;
// contrastive uses the +-1 pair penalty. When `gradient` is non-null it is
// overwritten with d(loss)/d(parameters) in ScorerModel::parameters() order.
double block_objective(const ScorerModel& model, const EmbeddingSet& text,
                       const EmbeddingSet& image, const PairBlock& block, LossKind loss,
                       std::vector<double>* gradient = nullptr);

struct GradientCheckOptions {
  std::size_t parameters_to_check = 128;
  double step = 1e-5;
  std::uint64_t seed = 0;
  // Test hook: scale the analytic gradient of one parameter before comparing.
  std::optional<std::size_t> corrupt_parameter;
  double corrupt_factor = 2.0;
};

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_parameter = 0;
  std::size_t checked = 0;
};

// max |analytic - central difference| / max(1e-8, |central difference|)
// over a seeded subset of parameters.
GradientCheckResult gradient_check(const ScorerModel& model, const EmbeddingSet& text,
                                   const EmbeddingSet& image, const PairBlock& block,
                                   LossKind loss, const GradientCheckOptions& options = {});

}  // namespace xmodal
