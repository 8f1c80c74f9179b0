#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "xmodal/corpus.hpp"
#include "xmodal/embedding.hpp"
#include "xmodal/rng.hpp"

namespace xmodal::testing {

inline std::vector<std::string> make_ids(const std::string& prefix, std::size_t n) {
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ids.push_back(prefix + std::to_string(i));
  return ids;
}

// n Gaussian directions normalized to unit length.
inline std::vector<float> random_unit_rows(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> data(n * dim);
  for (std::size_t r = 0; r < n; ++r) {
    double norm = 0.0;
    std::vector<double> v(dim);
    for (auto& x : v) {
      x = rng.normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (std::size_t c = 0; c < dim; ++c) data[r * dim + c] = static_cast<float>(v[c] / norm);
  }
  return data;
}

inline std::vector<float> random_gaussian_rows(std::size_t n, std::size_t dim, std::uint64_t seed,
                                               double scale = 1.0) {
  Rng rng(seed);
  std::vector<float> data(n * dim);
  for (auto& x : data) x = static_cast<float>(scale * rng.normal());
  return data;
}

inline EmbeddingSet make_set(Modality modality, std::size_t dim, std::vector<float> data,
                             const std::string& prefix) {
  const std::size_t n = data.size() / dim;
  return EmbeddingSet(modality, static_cast<std::uint32_t>(dim), make_ids(prefix, n),
                      std::move(data));
}

// Image side identical to the text side, rows paired by index.
inline PairedCorpus aligned_corpus(std::size_t n, std::size_t dim, std::uint64_t seed) {
  auto rows = random_unit_rows(n, dim, seed);
  return pair_by_row(make_set(Modality::kText, dim, rows, "t"),
                     make_set(Modality::kImage, dim, rows, "i"));
}

// Independent random sides, rows paired by index.
inline PairedCorpus random_corpus(std::size_t n, std::size_t dim, std::uint64_t seed) {
  return pair_by_row(make_set(Modality::kText, dim, random_unit_rows(n, dim, seed), "t"),
                     make_set(Modality::kImage, dim, random_unit_rows(n, dim, seed + 1000003), "i"));
}

// `images` images, each with `captions` captions placed near it.
inline PairedCorpus multi_caption_corpus(std::size_t images, std::size_t captions, std::size_t dim,
                                         std::uint64_t seed, double noise = 0.01) {
  auto image_rows = random_unit_rows(images, dim, seed);
  Rng rng(seed + 17);
  std::vector<float> text_rows;
  Manifest manifest;
  manifest.relation = Relation::kOneToMany;
  manifest.captions_per_item = captions;
  for (std::size_t i = 0; i < images; ++i) {
    for (std::size_t c = 0; c < captions; ++c) {
      for (std::size_t d = 0; d < dim; ++d) {
        text_rows.push_back(
            static_cast<float>(image_rows[i * dim + d] + noise * rng.normal()));
      }
      manifest.entries.push_back(
          {"t" + std::to_string(i * captions + c), "i" + std::to_string(i)});
    }
  }
  return build_corpus(make_set(Modality::kText, dim, std::move(text_rows), "t"),
                      make_set(Modality::kImage, dim, std::move(image_rows), "i"), manifest);
}

}  // namespace xmodal::testing
