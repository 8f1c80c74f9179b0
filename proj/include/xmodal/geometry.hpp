#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "xmodal/embedding.hpp"

namespace xmodal {

// Equal-weight empirical point cloud, row-major.
struct PointSet {
  std::size_t dim = 0;
  std::vector<double> points;

  std::size_t size() const { return dim == 0 ? 0 : points.size() / dim; }
  std::span<const double> point(std::size_t i) const {
    return std::span<const double>(points).subspan(i * dim, dim);
  }

  static PointSet from_rows(const EmbeddingSet& set, std::span<const std::size_t> rows);
  static PointSet from_set(const EmbeddingSet& set);
};

// Euclidean distance between the two clouds' means.
double centroid_gap(const EmbeddingSet& a, const EmbeddingSet& b);

// sqrt(min over bijections of the mean squared matching distance).
double wasserstein2_exact(const PointSet& a, const PointSet& b);

struct GapReport {
  double centroid_gap = 0.0;
  double w2_mean = 0.0;
  std::size_t w2_batches = 0;
  std::size_t batch_size = 0;
  std::size_t dropped_rows = 0;
  std::uint64_t seed = 0;
  std::vector<double> batch_values;
};

inline constexpr std::size_t kDefaultW2BatchSize = 256;

// Shuffles the shared row indices with `seed`, cuts them into full batches
// of batch_size (the short tail is dropped) and averages the exact W2 of the
// paired row subsets. Only the W2 fields of the report are filled.
GapReport wasserstein2_batched(const EmbeddingSet& a, const EmbeddingSet& b,
                               std::size_t batch_size, std::uint64_t seed);

// Centroid gap plus batched W2.
GapReport gap_report(const EmbeddingSet& a, const EmbeddingSet& b, std::size_t batch_size,
                     std::uint64_t seed);

}  // namespace xmodal
