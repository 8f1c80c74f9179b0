#include "xmodal/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "xmodal/error.hpp"
#include "xmodal/parallel.hpp"

namespace xmodal {
namespace {

template <typename T>
double squared_norm(std::span<const T> v) {
  double s = 0.0;
  for (auto x : v) s += static_cast<double>(x) * static_cast<double>(x);
  return s;
}

// Shared by score() and score_matrix() so both produce identical bits. For
// cosine the caller passes precomputed squared norms.
template <typename T>
double kernel(Metric metric, std::span<const T> p, std::span<const T> q, double pp, double qq) {
  const std::size_t n = p.size();
  switch (metric) {
    case Metric::kEuclidean: {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(p[i]) - static_cast<double>(q[i]);
        s += d * d;
      }
      return std::sqrt(s);
    }
    case Metric::kCosine: {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        dot += static_cast<double>(p[i]) * static_cast<double>(q[i]);
      }
      return std::clamp(dot / std::sqrt(pp * qq), -1.0, 1.0);
    }
    case Metric::kManhattan: {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        s += std::abs(static_cast<double>(p[i]) - static_cast<double>(q[i]));
      }
      return s;
    }
    case Metric::kChiSquare: {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double a = p[i];
        const double b = q[i];
        const double denom = a + b;
        if (denom == 0.0) continue;
        const double d = a - b;
        s += d * d / denom;
      }
      return 0.5 * s;
    }
  }
  return 0.0;
}

template <typename T>
double score_impl(Metric metric, std::span<const T> p, std::span<const T> q) {
  if (p.size() != q.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "vector lengths differ (" +
                                                   std::to_string(p.size()) + " vs " +
                                                   std::to_string(q.size()) + ")");
  }
  if (p.empty()) throw Error(ErrorCode::kInvalidArgument, "vectors must be non-empty");
  double pp = 0.0;
  double qq = 0.0;
  if (metric == Metric::kCosine) {
    pp = squared_norm(p);
    qq = squared_norm(q);
    if (pp == 0.0 || qq == 0.0) {
      throw Error(ErrorCode::kZeroNorm, "cosine similarity of a zero-norm vector");
    }
  }
  return kernel(metric, p, q, pp, qq);
}

}  // namespace

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::kEuclidean: return "euclidean";
    case Metric::kCosine: return "cosine";
    case Metric::kManhattan: return "manhattan";
    case Metric::kChiSquare: return "chi_square";
  }
  return "?";
}

std::optional<Metric> parse_metric(std::string_view name) {
  for (auto m : kAllMetrics) {
    if (metric_name(m) == name) return m;
  }
  if (name == "chi-square" || name == "chisquare") return Metric::kChiSquare;
  return std::nullopt;
}

double score(Metric metric, std::span<const float> p, std::span<const float> q) {
  return score_impl(metric, p, q);
}

double score(Metric metric, std::span<const double> p, std::span<const double> q) {
  return score_impl(metric, p, q);
}

std::string ScoreMatrix::label() const {
  return metric ? std::string(metric_name(*metric)) : std::string("learned");
}

ScoreMatrix score_matrix(Metric metric, const EmbeddingSet& a, const EmbeddingSet& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "embedding dims differ (" + std::to_string(a.dim()) + " vs " +
                    std::to_string(b.dim()) + ")");
  }
  std::vector<double> a_norms(a.count(), 0.0);
  std::vector<double> b_norms(b.count(), 0.0);
  if (metric == Metric::kCosine) {
    auto fill = [](const EmbeddingSet& set, std::vector<double>& norms) {
      for (std::size_t i = 0; i < set.count(); ++i) {
        norms[i] = squared_norm(set.row(i));
        if (norms[i] == 0.0) {
          throw Error(ErrorCode::kZeroNorm,
                      "zero-norm row '" + set.id(i) + "' under cosine similarity");
        }
      }
    };
    fill(a, a_norms);
    fill(b, b_norms);
  }

  ScoreMatrix m;
  m.metric = metric;
  m.orientation = orientation(metric);
  m.rows = a.count();
  m.cols = b.count();
  m.values.resize(m.rows * m.cols);
  m.row_ids = a.ids();
  m.col_ids = b.ids();
  parallel_for(m.rows, [&](std::size_t i) {
    const auto p = a.row(i);
    for (std::size_t j = 0; j < m.cols; ++j) {
      m.values[i * m.cols + j] = kernel(metric, p, b.row(j), a_norms[i], b_norms[j]);
    }
  });
  return m;
}

}  // namespace xmodal
