#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xmodal/embedding.hpp"
#include "xmodal/metrics.hpp"

namespace xmodal {

enum class LossKind { kMse, kContrastive };

std::string_view loss_name(LossKind loss);
LossKind parse_loss(std::string_view name);

// Fully connected layer; weights are row-major out x in.
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> biases;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Learned similarity over cat(text, image): ReLU hidden layers, one tanh
// output in (-1, 1).
class ScorerModel {
 public:
  ScorerModel() = default;
  // Zero-filled model. The first text_dim inputs are the text embedding.
  ScorerModel(std::size_t text_dim, std::size_t image_dim, std::vector<std::size_t> hidden_sizes);

  // Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases.
  static ScorerModel initialized(std::size_t text_dim, std::size_t image_dim,
                                 std::vector<std::size_t> hidden_sizes, std::uint64_t seed);

  std::size_t input_dim() const { return text_dim_ + image_dim_; }
  std::size_t text_dim() const { return text_dim_; }
  std::size_t image_dim() const { return image_dim_; }
  const std::vector<std::size_t>& hidden_sizes() const { return hidden_sizes_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::size_t parameter_count() const;

  // Parameters flattened layer by layer, weights before biases.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> values);

  // The first layer sums the text and image halves separately and then adds
  // the bias, so dense scoring with cached projections matches exactly.
  double forward(std::span<const float> text, std::span<const float> image) const;
  double forward(std::span<const double> text, std::span<const double> image) const;
  double forward(std::span<const double> input) const;

  // Output given first-layer text/image partial sums.
  double forward_from_projections(std::span<const double> text_part,
                                  std::span<const double> image_part) const;
  // First-layer partial sum for the text (or image) half.
  std::vector<double> project_text(std::span<const float> text) const;
  std::vector<double> project_image(std::span<const float> image) const;

  // Provenance carried into the model file.
  std::uint64_t seed = 0;
  LossKind loss = LossKind::kContrastive;

  friend bool operator==(const ScorerModel&, const ScorerModel&) = default;

 private:
  std::size_t text_dim_ = 0;
  std::size_t image_dim_ = 0;
  std::vector<std::size_t> hidden_sizes_;
  std::vector<DenseLayer> layers_;
};

// Pair penalty: positive pairs pulled to +1, negatives to -1.
constexpr double contrastive_pair_loss(double d_hat, bool is_positive) {
  const double r = is_positive ? 1.0 - d_hat : d_hat + 1.0;
  return 0.5 * r * r;
}

// Mean pair loss of one query against every candidate; exactly one positive.
double per_query_loss(const ScorerModel& model, std::span<const float> query,
                      const std::vector<std::span<const float>>& candidates,
                      std::size_t positive_index);

// Same reduction over precomputed scores.
double per_query_loss(std::span<const double> d_hat, std::size_t positive_index);

// Pair-loss matrix L[i][j] for a one-to-one set of N pairs (diagonal positive).
std::vector<double> pair_loss_matrix(std::span<const double> d_hat, std::size_t n);

struct DatasetLoss {
  double text_side = 0.0;   // mean over texts of their per-query losses
  double image_side = 0.0;  // mean over images of their per-query losses
};

DatasetLoss dataset_loss_from_scores(std::span<const double> d_hat, std::size_t n);

enum class LossSide { kText, kImage, kBoth };

// Full-dataset contrastive objective over a one-to-one corpus.
double dataset_loss(const ScorerModel& model, const EmbeddingSet& text,
                    const EmbeddingSet& image, LossSide side = LossSide::kBoth);

struct MseSample {
  std::span<const float> text;
  std::span<const float> image;
  double target = 0.0;
};

double mse_loss(const ScorerModel& model, std::span<const MseSample> batch);

// N_text x N_image matrix of forward() outputs, similarity-oriented.
ScoreMatrix score_matrix(const ScorerModel& model, const EmbeddingSet& text,
                         const EmbeddingSet& image);

// JSON document with base64 little-endian float64 payloads per layer.
std::string encode_model(const ScorerModel& model);
ScorerModel decode_model(std::string_view json_text);
void save_model(const ScorerModel& model, const std::filesystem::path& path);
ScorerModel load_model(const std::filesystem::path& path);

}  // namespace xmodal
