#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xmodal/embedding.hpp"

namespace xmodal {

enum class Relation { kOneToOne, kOneToMany };

// query row -> relevant candidate rows, in manifest order.
class RelevanceMap {
 public:
  RelevanceMap() = default;
  explicit RelevanceMap(std::vector<std::vector<std::size_t>> relevant)
      : relevant_(std::move(relevant)) {}

  std::size_t query_count() const { return relevant_.size(); }
  const std::vector<std::size_t>& relevant(std::size_t query) const {
    return relevant_[query];
  }
  bool is_relevant(std::size_t query, std::size_t candidate) const;

 private:
  std::vector<std::vector<std::size_t>> relevant_;
};

struct ManifestEntry {
  std::string query_id;      // text side
  std::string candidate_id;  // image side
};

// Tab-separated `query_id<TAB>candidate_id` lines. Lines starting with '#'
// are comments; two comment forms double as declarations:
//   # relation: one-to-many
//   # captions_per_item: 5
struct Manifest {
  Relation relation = Relation::kOneToOne;
  std::size_t captions_per_item = 5;
  std::vector<ManifestEntry> entries;
};

Manifest parse_manifest(std::string_view text);
Manifest read_manifest(const std::filesystem::path& path);
std::string format_manifest(const Manifest& manifest);

// Text side a, image side b, and both directions of ground truth. In a
// one-to-many corpus each text has one image and each image up to
// captions_per_item texts.
struct PairedCorpus {
  EmbeddingSet text;
  EmbeddingSet image;
  RelevanceMap text_to_image;
  RelevanceMap image_to_text;
  Relation relation = Relation::kOneToOne;
  std::size_t captions_per_item = 1;

  std::size_t item_count() const { return image.count(); }
};

PairedCorpus build_corpus(EmbeddingSet text, EmbeddingSet image, const Manifest& manifest);
PairedCorpus build_corpus(EmbeddingSet text, EmbeddingSet image,
                          const std::filesystem::path& manifest_path);

// Pairs row i of `text` with row i of `image`.
PairedCorpus pair_by_row(EmbeddingSet text, EmbeddingSet image);

// Keeps only the first related text of each image, yielding a one-to-one corpus.
PairedCorpus first_caption_only(const PairedCorpus& corpus);

// Sub-corpus over the given image rows; each image keeps all its texts.
PairedCorpus select_items(const PairedCorpus& corpus, std::span<const std::size_t> image_rows);

// Seeded sample of `count` items (rows kept in original order).
PairedCorpus sample_items(const PairedCorpus& corpus, std::size_t count, std::uint64_t seed);

struct SplitSpec {
  std::array<double, 3> ratios{0.8, 0.1, 0.1};
  std::uint64_t seed = 0;
};

struct CorpusSplits {
  PairedCorpus train;
  PairedCorpus validation;
  PairedCorpus test;
};

// Partition of items by a seeded shuffle: validation and test get
// floor(ratio * N) items, training gets the rest.
CorpusSplits split_corpus(const PairedCorpus& corpus, const SplitSpec& spec);

// Item counts split_corpus would produce for N items.
std::array<std::size_t, 3> split_sizes(std::size_t items, const std::array<double, 3>& ratios);

}  // namespace xmodal
