#include "xmodal/retrieval.hpp"

#include <algorithm>
#include <numeric>

#include "xmodal/error.hpp"
#include "xmodal/parallel.hpp"

namespace xmodal {
namespace {

const RelevanceMap& relevance_for(const PairedCorpus& corpus, Direction direction) {
  return direction == Direction::kTextToImage ? corpus.text_to_image : corpus.image_to_text;
}

template <typename Fn>
void for_each_scored(const std::vector<Ranking>& rankings, const RelevanceMap& relevance,
                     std::size_t k, Fn&& fn) {
  for (const auto& r : rankings) {
    if (r.candidates.size() < k) {
      throw Error(ErrorCode::kOutOfRange, "ranking for '" + r.query_id + "' has fewer than " +
                                              std::to_string(k) + " entries");
    }
    if (r.query >= relevance.query_count() || relevance.relevant(r.query).empty()) {
      throw Error(ErrorCode::kMissingQuery,
                  "query '" + r.query_id + "' has no entry in the relevance map");
    }
    std::size_t found = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if (relevance.is_relevant(r.query, r.candidates[i])) ++found;
    }
    fn(found);
  }
}

}  // namespace

std::string_view direction_name(Direction d) {
  return d == Direction::kTextToImage ? "text_to_image" : "image_to_text";
}

std::optional<Direction> parse_direction(std::string_view name) {
  if (name == "text_to_image" || name == "t2i") return Direction::kTextToImage;
  if (name == "image_to_text" || name == "i2t") return Direction::kImageToText;
  return std::nullopt;
}

std::vector<Ranking> rank(const ScoreMatrix& matrix, Direction direction, std::size_t k) {
  const bool by_row = direction == Direction::kTextToImage;
  const std::size_t queries = by_row ? matrix.rows : matrix.cols;
  const std::size_t candidates = by_row ? matrix.cols : matrix.rows;
  if (k < 1 || k > candidates) {
    throw Error(ErrorCode::kOutOfRange, "k=" + std::to_string(k) + " outside [1, " +
                                            std::to_string(candidates) + "]");
  }
  const auto& query_ids = by_row ? matrix.row_ids : matrix.col_ids;
  const auto& cand_ids = by_row ? matrix.col_ids : matrix.row_ids;
  const bool higher_is_better = matrix.orientation == Orientation::kSimilarity;

  std::vector<Ranking> out(queries);
  parallel_for(queries, [&](std::size_t q) {
    auto value = [&](std::size_t c) { return by_row ? matrix.at(q, c) : matrix.at(c, q); };
    std::vector<std::size_t> order(candidates);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto better = [&](std::size_t x, std::size_t y) {
      const double vx = value(x);
      const double vy = value(y);
      if (vx != vy) return higher_is_better ? vx > vy : vx < vy;
      return x < y;
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      better);
    order.resize(k);
    Ranking r;
    r.query = q;
    r.query_id = query_ids.empty() ? std::to_string(q) : query_ids[q];
    r.candidates = order;
    for (auto c : order) {
      r.candidate_ids.push_back(cand_ids.empty() ? std::to_string(c) : cand_ids[c]);
      r.scores.push_back(value(c));
    }
    out[q] = std::move(r);
  });
  return out;
}

double hit_rate_at_k(const std::vector<Ranking>& rankings, const RelevanceMap& relevance,
                     std::size_t k) {
  if (rankings.empty()) throw Error(ErrorCode::kEmptyInput, "no rankings to score");
  std::size_t hits = 0;
  for_each_scored(rankings, relevance, k, [&](std::size_t found) { hits += found > 0; });
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

double precision_at_k(const std::vector<Ranking>& rankings, const RelevanceMap& relevance,
                      std::size_t k) {
  if (rankings.empty()) throw Error(ErrorCode::kEmptyInput, "no rankings to score");
  std::size_t found_total = 0;
  for_each_scored(rankings, relevance, k, [&](std::size_t found) { found_total += found; });
  return static_cast<double>(found_total) /
         (static_cast<double>(k) * static_cast<double>(rankings.size()));
}

double precision_upper_bound(Direction direction, std::size_t k, std::size_t captions_per_item) {
  if (k < 1 || captions_per_item < 1) {
    throw Error(ErrorCode::kInvalidArgument, "k and captions_per_item must be >= 1");
  }
  const std::size_t relevant = direction == Direction::kImageToText ? captions_per_item : 1;
  return static_cast<double>(std::min(relevant, k)) / static_cast<double>(k);
}

RetrievalReport evaluate(const PairedCorpus& corpus, const ScoreMatrix& matrix,
                         Direction direction, const std::vector<std::size_t>& k_values) {
  if (k_values.empty()) throw Error(ErrorCode::kInvalidArgument, "empty K list");
  if (matrix.rows != corpus.text.count() || matrix.cols != corpus.image.count()) {
    throw Error(ErrorCode::kDimensionMismatch, "score matrix shape does not match corpus");
  }
  const auto& relevance = relevance_for(corpus, direction);
  const auto k_max = *std::max_element(k_values.begin(), k_values.end());
  const auto rankings = rank(matrix, direction, k_max);
  if (rankings.empty()) throw Error(ErrorCode::kEmptyInput, "corpus has no queries");

  RetrievalReport report;
  report.direction = direction;
  report.metric = matrix.label();
  report.query_count = rankings.size();
  report.candidate_count = direction == Direction::kTextToImage ? matrix.cols : matrix.rows;
  report.k_values = k_values;
  const double n = static_cast<double>(rankings.size());
  for (auto k : k_values) {
    std::size_t hits = 0;
    std::size_t found_total = 0;
    for_each_scored(rankings, relevance, k, [&](std::size_t found) {
      hits += found > 0;
      found_total += found;
    });
    report.hits.push_back(hits);
    report.relevant_found.push_back(found_total);
    report.hit_rate.push_back(static_cast<double>(hits) / n);
    report.precision.push_back(static_cast<double>(found_total) / (static_cast<double>(k) * n));
    report.upper_bound.push_back(precision_upper_bound(direction, k, corpus.captions_per_item));
  }
  return report;
}

RetrievalReport evaluate(const PairedCorpus& corpus, Metric metric, Direction direction,
                         const std::vector<std::size_t>& k_values) {
  return evaluate(corpus, score_matrix(metric, corpus.text, corpus.image), direction, k_values);
}

RetrievalReport evaluate(const PairedCorpus& corpus, const ScorerModel& model,
                         Direction direction, const std::vector<std::size_t>& k_values) {
  if (model.input_dim() != std::size_t{corpus.text.dim()} + corpus.image.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "scorer expects input dim " + std::to_string(model.input_dim()) + ", corpus has " +
                    std::to_string(corpus.text.dim()) + " + " + std::to_string(corpus.image.dim()));
  }
  return evaluate(corpus, score_matrix(model, corpus.text, corpus.image), direction, k_values);
}

}  // namespace xmodal
