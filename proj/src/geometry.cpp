#include "xmodal/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "xmodal/assignment.hpp"
#include "xmodal/error.hpp"
#include "xmodal/parallel.hpp"
#include "xmodal/rng.hpp"

namespace xmodal {
namespace {

// Solving with the lexicographically smaller cloud on the row side makes
// W2(a, b) and W2(b, a) run the identical computation.
bool lexicographically_less(const PointSet& a, const PointSet& b) {
  return std::lexicographical_compare(a.points.begin(), a.points.end(), b.points.begin(),
                                      b.points.end());
}

void require_same_dim(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::kDimensionMismatch, "embedding dims differ (" + std::to_string(a) +
                                                   " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

PointSet PointSet::from_rows(const EmbeddingSet& set, std::span<const std::size_t> rows) {
  PointSet out;
  out.dim = set.dim();
  out.points.reserve(rows.size() * set.dim());
  for (auto r : rows) {
    for (auto v : set.row(r)) out.points.push_back(v);
  }
  return out;
}

PointSet PointSet::from_set(const EmbeddingSet& set) {
  return PointSet{set.dim(), std::vector<double>(set.data().begin(), set.data().end())};
}

double centroid_gap(const EmbeddingSet& a, const EmbeddingSet& b) {
  require_same_dim(a.dim(), b.dim());
  if (a.empty() || b.empty()) {
    throw Error(ErrorCode::kEmptyInput, "centroid gap needs non-empty sets");
  }
  auto mean = [](const EmbeddingSet& s) {
    std::vector<double> m(s.dim(), 0.0);
    for (std::size_t r = 0; r < s.count(); ++r) {
      auto row = s.row(r);
      for (std::size_t c = 0; c < s.dim(); ++c) m[c] += row[c];
    }
    for (auto& v : m) v /= static_cast<double>(s.count());
    return m;
  };
  const auto ma = mean(a);
  const auto mb = mean(b);
  double s = 0.0;
  for (std::size_t c = 0; c < ma.size(); ++c) {
    const double d = ma[c] - mb[c];
    s += d * d;
  }
  return std::sqrt(s);
}

double wasserstein2_exact(const PointSet& a, const PointSet& b) {
  require_same_dim(a.dim, b.dim);
  const std::size_t m = a.size();
  if (m != b.size()) {
    throw Error(ErrorCode::kCountMismatch, "W2 needs equal-size point sets (" +
                                               std::to_string(m) + " vs " +
                                               std::to_string(b.size()) + ")");
  }
  if (m == 0) throw Error(ErrorCode::kEmptyInput, "W2 needs at least one point");
  const PointSet& rows = lexicographically_less(b, a) ? b : a;
  const PointSet& cols = &rows == &a ? b : a;

  std::vector<double> cost(m * m);
  for (std::size_t i = 0; i < m; ++i) {
    auto p = rows.point(i);
    for (std::size_t j = 0; j < m; ++j) {
      auto q = cols.point(j);
      double s = 0.0;
      for (std::size_t c = 0; c < rows.dim; ++c) {
        const double d = p[c] - q[c];
        s += d * d;
      }
      cost[i * m + j] = s;
    }
  }
  const auto assignment = solve_assignment(cost, m);
  return std::sqrt(std::max(0.0, assignment.cost / static_cast<double>(m)));
}

GapReport wasserstein2_batched(const EmbeddingSet& a, const EmbeddingSet& b,
                               std::size_t batch_size, std::uint64_t seed) {
  require_same_dim(a.dim(), b.dim());
  if (a.count() != b.count()) {
    throw Error(ErrorCode::kCountMismatch, "batched W2 needs paired sets of equal count (" +
                                               std::to_string(a.count()) + " vs " +
                                               std::to_string(b.count()) + ")");
  }
  if (batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch size must be >= 1");
  if (batch_size > a.count()) {
    throw Error(ErrorCode::kOutOfRange, "batch size " + std::to_string(batch_size) +
                                            " exceeds row count " + std::to_string(a.count()));
  }
  const auto perm = seeded_permutation(a.count(), seed);
  const std::size_t batches = a.count() / batch_size;

  GapReport report;
  report.batch_size = batch_size;
  report.seed = seed;
  report.w2_batches = batches;
  report.dropped_rows = a.count() - batches * batch_size;
  report.batch_values.resize(batches);
  parallel_for(batches, [&](std::size_t k) {
    std::span<const std::size_t> rows(perm.data() + k * batch_size, batch_size);
    report.batch_values[k] =
        wasserstein2_exact(PointSet::from_rows(a, rows), PointSet::from_rows(b, rows));
  });
  double sum = 0.0;
  for (auto v : report.batch_values) sum += v;
  report.w2_mean = sum / static_cast<double>(batches);
  return report;
}

GapReport gap_report(const EmbeddingSet& a, const EmbeddingSet& b, std::size_t batch_size,
                     std::uint64_t seed) {
  auto report = wasserstein2_batched(a, b, batch_size, seed);
  report.centroid_gap = centroid_gap(a, b);
  return report;
}

}  // namespace xmodal
