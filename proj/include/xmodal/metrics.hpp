#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xmodal/embedding.hpp"

namespace xmodal {

enum class Metric { kEuclidean, kCosine, kManhattan, kChiSquare };

enum class Orientation { kSimilarity, kDissimilarity };

inline constexpr Metric kAllMetrics[] = {Metric::kEuclidean, Metric::kCosine,
                                         Metric::kManhattan, Metric::kChiSquare};

constexpr Orientation orientation(Metric m) {
  return m == Metric::kCosine ? Orientation::kSimilarity : Orientation::kDissimilarity;
}

std::string_view metric_name(Metric m);
std::optional<Metric> parse_metric(std::string_view name);

// Accumulates in double. Chi-square is evaluated literally on signed inputs:
// components with p_i + q_i == 0 are skipped and the sum may be negative.
// Cosine is clamped to [-1, 1].
double score(Metric metric, std::span<const float> p, std::span<const float> q);
double score(Metric metric, std::span<const double> p, std::span<const double> q);

// values[i * cols + j] = score(metric, rows[i], cols[j]); row side is text.
struct ScoreMatrix {
  std::optional<Metric> metric;  // empty for learned scorers
  Orientation orientation = Orientation::kSimilarity;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::string label() const;
};

ScoreMatrix score_matrix(Metric metric, const EmbeddingSet& a, const EmbeddingSet& b);

}  // namespace xmodal
