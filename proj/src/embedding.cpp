#include "xmodal/embedding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

#include "xmodal/error.hpp"

namespace xmodal {
namespace {

static_assert(std::endian::native == std::endian::little,
              "XEB1 I/O assumes a little-endian host");

constexpr char kMagicBytes[4] = {'X', 'E', 'B', '1'};

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    T value;
    std::memcpy(&value, take(sizeof(T), what).data(), sizeof(T));
    return value;
  }

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorCode::kTruncated,
                  std::string("truncated XEB1 data while reading ") + what);
    }
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string_view modality_name(Modality modality) {
  return modality == Modality::kText ? "text" : "image";
}

EmbeddingSet::EmbeddingSet(Modality modality, std::uint32_t dim,
                           std::vector<std::string> ids, std::vector<float> data)
    : modality_(modality), dim_(dim), ids_(std::move(ids)), data_(std::move(data)) {
  if (dim_ == 0) throw Error(ErrorCode::kInvalidArgument, "embedding dim must be positive");
  if (data_.size() != ids_.size() * dim_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "embedding payload has " + std::to_string(data_.size()) +
                    " values, expected " + std::to_string(ids_.size()) + " x " +
                    std::to_string(dim_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw Error(ErrorCode::kNonFinite,
                  "non-finite value in row '" + ids_[i / dim_] + "'");
    }
  }
  for (const auto& id : ids_) {
    if (id.size() > 0xFFFF) {
      throw Error(ErrorCode::kInvalidArgument, "id longer than 65535 bytes");
    }
  }
  sorted_rows_.resize(ids_.size());
  std::iota(sorted_rows_.begin(), sorted_rows_.end(), std::size_t{0});
  std::sort(sorted_rows_.begin(), sorted_rows_.end(),
            [this](std::size_t a, std::size_t b) { return ids_[a] < ids_[b]; });
  for (std::size_t i = 1; i < sorted_rows_.size(); ++i) {
    if (ids_[sorted_rows_[i - 1]] == ids_[sorted_rows_[i]]) {
      throw Error(ErrorCode::kDuplicateId, "duplicate id '" + ids_[sorted_rows_[i]] + "'");
    }
  }
}

std::size_t EmbeddingSet::find(std::string_view id) const {
  auto it = std::lower_bound(sorted_rows_.begin(), sorted_rows_.end(), id,
                             [this](std::size_t row, std::string_view key) {
                               return ids_[row] < key;
                             });
  if (it != sorted_rows_.end() && ids_[*it] == id) return *it;
  return count();
}

EmbeddingSet EmbeddingSet::select(std::span<const std::size_t> rows) const {
  std::vector<std::string> ids;
  std::vector<float> data;
  ids.reserve(rows.size());
  data.reserve(rows.size() * dim_);
  for (auto r : rows) {
    if (r >= count()) throw Error(ErrorCode::kOutOfRange, "row index out of range");
    ids.push_back(ids_[r]);
    auto src = row(r);
    data.insert(data.end(), src.begin(), src.end());
  }
  return EmbeddingSet(modality_, dim_, std::move(ids), std::move(data));
}

EmbeddingSet EmbeddingSet::l2_normalized() const {
  std::vector<float> data(data_);
  for (std::size_t r = 0; r < count(); ++r) {
    double sum_sq = 0.0;
    for (auto v : row(r)) sum_sq += static_cast<double>(v) * v;
    if (sum_sq == 0.0) {
      throw Error(ErrorCode::kZeroNorm, "cannot normalize zero row '" + ids_[r] + "'");
    }
    const double inv = 1.0 / std::sqrt(sum_sq);
    for (std::size_t c = 0; c < dim_; ++c) {
      auto& v = data[r * dim_ + c];
      v = static_cast<float>(v * inv);
    }
  }
  return EmbeddingSet(modality_, dim_, ids_, std::move(data));
}

bool operator==(const EmbeddingSet& a, const EmbeddingSet& b) {
  return a.modality_ == b.modality_ && a.dim_ == b.dim_ && a.ids_ == b.ids_ &&
         a.data_.size() == b.data_.size() &&
         std::memcmp(a.data_.data(), b.data_.data(), a.data_.size() * sizeof(float)) == 0;
}

std::vector<std::uint8_t> encode_embeddings(const EmbeddingSet& set) {
  std::vector<std::uint8_t> out;
  std::size_t id_bytes = 0;
  for (const auto& id : set.ids()) id_bytes += 2 + id.size();
  out.reserve(kXebHeaderSize + id_bytes + set.data().size_bytes());

  out.insert(out.end(), std::begin(kMagicBytes), std::end(kMagicBytes));
  put<std::uint16_t>(out, kXebVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(set.modality()));
  put<std::uint8_t>(out, 0);
  put<std::uint64_t>(out, set.count());
  put<std::uint32_t>(out, set.dim());
  for (const auto& id : set.ids()) {
    put<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
    out.insert(out.end(), id.begin(), id.end());
  }
  const auto* payload = reinterpret_cast<const std::uint8_t*>(set.data().data());
  out.insert(out.end(), payload, payload + set.data().size_bytes());
  return out;
}

EmbeddingSet decode_embeddings(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  auto magic = in.take(4, "magic");
  if (std::memcmp(magic.data(), kMagicBytes, 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "not an XEB1 file (bad magic)");
  }
  const auto version = in.get<std::uint16_t>("version");
  if (version != kXebVersion) {
    throw Error(ErrorCode::kUnsupportedVersion,
                "unsupported XEB1 version " + std::to_string(version));
  }
  const auto modality = in.get<std::uint8_t>("modality");
  if (modality > 1) {
    throw Error(ErrorCode::kParse, "unknown modality tag " + std::to_string(modality));
  }
  const auto dtype = in.get<std::uint8_t>("dtype");
  if (dtype != 0) {
    throw Error(ErrorCode::kUnsupportedDtype, "unsupported dtype " + std::to_string(dtype));
  }
  const auto count = in.get<std::uint64_t>("count");
  const auto dim = in.get<std::uint32_t>("dim");
  if (dim == 0) throw Error(ErrorCode::kParse, "XEB1 dim must be positive");
  // Every id costs at least two bytes, which bounds count before allocating.
  if (count > in.remaining() / 2 + 1) {
    throw Error(ErrorCode::kTruncated, "XEB1 count exceeds file size");
  }

  std::vector<std::string> ids;
  ids.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = in.get<std::uint16_t>("id length");
    auto raw = in.take(len, "id");
    ids.emplace_back(reinterpret_cast<const char*>(raw.data()), raw.size());
  }
  const std::uint64_t values = count * dim;
  if (values > in.remaining() / sizeof(float)) {
    throw Error(ErrorCode::kTruncated,
                "XEB1 payload truncated: declared " + std::to_string(count) + " rows of dim " +
                    std::to_string(dim));
  }
  std::vector<float> data(values);
  auto raw = in.take(values * sizeof(float), "payload");
  std::memcpy(data.data(), raw.data(), raw.size());
  if (in.remaining() != 0) {
    throw Error(ErrorCode::kParse, "trailing bytes after XEB1 payload");
  }
  return EmbeddingSet(static_cast<Modality>(modality), dim, std::move(ids), std::move(data));
}

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
  const auto bytes = encode_embeddings(set);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

EmbeddingSet load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_embeddings(bytes);
}

}  // namespace xmodal
