#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xmodal/corpus.hpp"
#include "xmodal/metrics.hpp"
#include "xmodal/scorer.hpp"

namespace xmodal {

enum class Direction { kTextToImage, kImageToText };

std::string_view direction_name(Direction d);
std::optional<Direction> parse_direction(std::string_view name);

struct Ranking {
  std::size_t query = 0;
  std::string query_id;
  std::vector<std::size_t> candidates;  // best first
  std::vector<std::string> candidate_ids;
  std::vector<double> scores;
};

// Queries are matrix rows for text-to-image and columns for image-to-text.
// Ties go to the lower candidate index.
std::vector<Ranking> rank(const ScoreMatrix& matrix, Direction direction, std::size_t k);

// Fraction of queries with at least one relevant candidate in the top k.
double hit_rate_at_k(const std::vector<Ranking>& rankings, const RelevanceMap& relevance,
                     std::size_t k);

// Mean over queries of (#relevant in top k) / k.
double precision_at_k(const std::vector<Ranking>& rankings, const RelevanceMap& relevance,
                      std::size_t k);

// Best achievable precision@k given how many relevant items a query can have.
double precision_upper_bound(Direction direction, std::size_t k, std::size_t captions_per_item);

struct RetrievalReport {
  Direction direction = Direction::kTextToImage;
  std::string metric;
  std::size_t query_count = 0;
  std::size_t candidate_count = 0;
  std::vector<std::size_t> k_values;
  std::vector<std::size_t> hits;            // queries with a relevant item in top k
  std::vector<std::size_t> relevant_found;  // relevant items in top k, summed over queries
  std::vector<double> hit_rate;
  std::vector<double> precision;
  std::vector<double> upper_bound;
};

inline const std::vector<std::size_t> kDefaultKs{1, 5, 10};

RetrievalReport evaluate(const PairedCorpus& corpus, const ScoreMatrix& matrix,
                         Direction direction, const std::vector<std::size_t>& k_values = kDefaultKs);
RetrievalReport evaluate(const PairedCorpus& corpus, Metric metric, Direction direction,
                         const std::vector<std::size_t>& k_values = kDefaultKs);
RetrievalReport evaluate(const PairedCorpus& corpus, const ScorerModel& model,
                         Direction direction, const std::vector<std::size_t>& k_values = kDefaultKs);

}  // namespace xmodal
