#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xmodal {

enum class Modality : std::uint8_t { kText = 0, kImage = 1 };

std::string_view modality_name(Modality modality);

// One modality's N x dim matrix of 32-bit representations, row-major, with a
// unique string id per row. Immutable after construction.
class EmbeddingSet {
 public:
  // Validates shape, id uniqueness and finiteness; throws xmodal::Error.
  EmbeddingSet(Modality modality, std::uint32_t dim, std::vector<std::string> ids,
               std::vector<float> data);

  Modality modality() const { return modality_; }
  std::uint32_t dim() const { return dim_; }
  std::size_t count() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  const std::vector<std::string>& ids() const { return ids_; }
  const std::string& id(std::size_t row) const { return ids_[row]; }
  std::span<const float> data() const { return data_; }
  std::span<const float> row(std::size_t index) const {
    return std::span<const float>(data_).subspan(index * dim_, dim_);
  }

  // Row index of `id`, or count() when absent.
  std::size_t find(std::string_view id) const;

  // New set holding the given rows in the given order.
  EmbeddingSet select(std::span<const std::size_t> rows) const;

  // Copy with every row scaled to unit L2 norm; zero rows are rejected.
  EmbeddingSet l2_normalized() const;

  friend bool operator==(const EmbeddingSet& a, const EmbeddingSet& b);

 private:
  Modality modality_;
  std::uint32_t dim_;
  std::vector<std::string> ids_;
  std::vector<float> data_;
  std::vector<std::size_t> sorted_rows_;  // row indices ordered by id
};

// XEB1 little-endian layout:
//   magic "XEB1" | version u16 = 1 | modality u8 | dtype u8 (0 = f32)
//   count u64 | dim u32 | count x (u16 byte length + UTF-8 id) | payload
inline constexpr std::uint32_t kXebMagic = 0x58454231;
inline constexpr std::uint16_t kXebVersion = 1;
inline constexpr std::size_t kXebHeaderSize = 4 + 2 + 1 + 1 + 8 + 4;

std::vector<std::uint8_t> encode_embeddings(const EmbeddingSet& set);
EmbeddingSet decode_embeddings(std::span<const std::uint8_t> bytes);

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path);
EmbeddingSet load_embeddings(const std::filesystem::path& path);

}  // namespace xmodal
