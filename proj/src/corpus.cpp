#include "xmodal/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "xmodal/error.hpp"
#include "xmodal/rng.hpp"

namespace xmodal {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

void parse_directive(std::string_view body, Manifest& manifest, std::size_t line_no) {
  const auto colon = body.find(':');
  if (colon == std::string_view::npos) return;
  const auto key = trim(body.substr(0, colon));
  const auto value = trim(body.substr(colon + 1));
  if (key == "relation") {
    if (value == "one-to-one") {
      manifest.relation = Relation::kOneToOne;
    } else if (value == "one-to-many") {
      manifest.relation = Relation::kOneToMany;
    } else {
      throw Error(ErrorCode::kParse, "manifest line " + std::to_string(line_no) +
                                         ": unknown relation '" + std::string(value) + "'");
    }
  } else if (key == "captions_per_item") {
    std::size_t n = 0;
    try {
      n = std::stoul(std::string(value));
    } catch (const std::exception&) {
      n = 0;
    }
    if (n == 0) {
      throw Error(ErrorCode::kParse, "manifest line " + std::to_string(line_no) +
                                         ": captions_per_item must be a positive integer");
    }
    manifest.captions_per_item = n;
  }
}

std::vector<std::vector<std::size_t>> invert(const std::vector<std::vector<std::size_t>>& rel,
                                             std::size_t candidate_count) {
  std::vector<std::vector<std::size_t>> out(candidate_count);
  for (std::size_t q = 0; q < rel.size(); ++q) {
    for (auto c : rel[q]) out[c].push_back(q);
  }
  return out;
}

}  // namespace

bool RelevanceMap::is_relevant(std::size_t query, std::size_t candidate) const {
  const auto& r = relevant_[query];
  return std::find(r.begin(), r.end(), candidate) != r.end();
}

Manifest parse_manifest(std::string_view text) {
  Manifest manifest;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    if (line.front() == '#') {
      parse_directive(line.substr(1), manifest, line_no);
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || line.find('\t', tab + 1) != std::string_view::npos) {
      throw Error(ErrorCode::kParse, "manifest line " + std::to_string(line_no) +
                                         ": expected query_id<TAB>candidate_id");
    }
    manifest.entries.push_back(
        {std::string(line.substr(0, tab)), std::string(line.substr(tab + 1))});
  }
  return manifest;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open manifest '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str());
}

std::string format_manifest(const Manifest& manifest) {
  std::string out;
  if (manifest.relation == Relation::kOneToMany) {
    out += "# relation: one-to-many\n# captions_per_item: " +
           std::to_string(manifest.captions_per_item) + "\n";
  }
  for (const auto& e : manifest.entries) out += e.query_id + "\t" + e.candidate_id + "\n";
  return out;
}

PairedCorpus build_corpus(EmbeddingSet text, EmbeddingSet image, const Manifest& manifest) {
  std::vector<std::vector<std::size_t>> t2i(text.count());
  std::vector<std::size_t> per_image(image.count(), 0);
  for (const auto& e : manifest.entries) {
    const auto q = text.find(e.query_id);
    if (q == text.count()) {
      throw Error(ErrorCode::kUnresolvedId, "manifest references unknown text id '" +
                                                e.query_id + "'");
    }
    const auto c = image.find(e.candidate_id);
    if (c == image.count()) {
      throw Error(ErrorCode::kUnresolvedId, "manifest references unknown image id '" +
                                                e.candidate_id + "'");
    }
    if (!t2i[q].empty()) {
      throw Error(ErrorCode::kDuplicateRelation,
                  "text '" + e.query_id + "' appears more than once in the manifest");
    }
    ++per_image[c];
    if (manifest.relation == Relation::kOneToOne && per_image[c] > 1) {
      throw Error(ErrorCode::kDuplicateRelation,
                  "image '" + e.candidate_id + "' paired more than once in a one-to-one manifest");
    }
    if (manifest.relation == Relation::kOneToMany &&
        per_image[c] > manifest.captions_per_item) {
      throw Error(ErrorCode::kDuplicateRelation,
                  "image '" + e.candidate_id + "' has more than " +
                      std::to_string(manifest.captions_per_item) + " captions");
    }
    t2i[q].push_back(c);
  }
  auto i2t = invert(t2i, image.count());
  PairedCorpus corpus{std::move(text), std::move(image), RelevanceMap(std::move(t2i)),
                      RelevanceMap(std::move(i2t)), manifest.relation,
                      manifest.relation == Relation::kOneToOne ? 1 : manifest.captions_per_item};
  return corpus;
}

PairedCorpus build_corpus(EmbeddingSet text, EmbeddingSet image,
                          const std::filesystem::path& manifest_path) {
  return build_corpus(std::move(text), std::move(image), read_manifest(manifest_path));
}

PairedCorpus pair_by_row(EmbeddingSet text, EmbeddingSet image) {
  if (text.count() != image.count()) {
    throw Error(ErrorCode::kCountMismatch, "row pairing needs equal counts (" +
                                               std::to_string(text.count()) + " vs " +
                                               std::to_string(image.count()) + ")");
  }
  Manifest manifest;
  for (std::size_t i = 0; i < text.count(); ++i) {
    manifest.entries.push_back({text.id(i), image.id(i)});
  }
  return build_corpus(std::move(text), std::move(image), manifest);
}

PairedCorpus first_caption_only(const PairedCorpus& corpus) {
  Manifest manifest;
  std::vector<std::size_t> text_rows;
  for (std::size_t img = 0; img < corpus.image.count(); ++img) {
    const auto& texts = corpus.image_to_text.relevant(img);
    if (texts.empty()) continue;
    text_rows.push_back(texts.front());
  }
  std::sort(text_rows.begin(), text_rows.end());
  auto text = corpus.text.select(text_rows);
  for (std::size_t t = 0; t < text.count(); ++t) {
    const auto original = text_rows[t];
    manifest.entries.push_back(
        {text.id(t), corpus.image.id(corpus.text_to_image.relevant(original).front())});
  }
  return build_corpus(std::move(text), corpus.image, manifest);
}

PairedCorpus select_items(const PairedCorpus& corpus, std::span<const std::size_t> image_rows) {
  Manifest manifest;
  manifest.relation = corpus.relation;
  manifest.captions_per_item = corpus.captions_per_item;
  std::vector<std::size_t> text_rows;
  for (auto img : image_rows) {
    if (img >= corpus.image.count()) {
      throw Error(ErrorCode::kOutOfRange, "item index out of range");
    }
    for (auto t : corpus.image_to_text.relevant(img)) {
      text_rows.push_back(t);
      manifest.entries.push_back({corpus.text.id(t), corpus.image.id(img)});
    }
  }
  std::sort(text_rows.begin(), text_rows.end());
  return build_corpus(corpus.text.select(text_rows), corpus.image.select(image_rows), manifest);
}

PairedCorpus sample_items(const PairedCorpus& corpus, std::size_t count, std::uint64_t seed) {
  if (count > corpus.item_count()) {
    throw Error(ErrorCode::kOutOfRange, "requested " + std::to_string(count) +
                                            " items from a corpus of " +
                                            std::to_string(corpus.item_count()));
  }
  auto perm = seeded_permutation(corpus.item_count(), seed);
  perm.resize(count);
  std::sort(perm.begin(), perm.end());
  return select_items(corpus, perm);
}

std::array<std::size_t, 3> split_sizes(std::size_t items, const std::array<double, 3>& ratios) {
  double sum = 0.0;
  for (auto r : ratios) {
    if (!(r >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "split ratios must be non-negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "split ratios must sum to 1");
  }
  // The small slack keeps products like 0.1 * 30 from flooring to 2.
  auto part = [items](double r) {
    return static_cast<std::size_t>(std::floor(r * static_cast<double>(items) + 1e-9));
  };
  const auto val = part(ratios[1]);
  const auto test = part(ratios[2]);
  return {items - val - test, val, test};
}

CorpusSplits split_corpus(const PairedCorpus& corpus, const SplitSpec& spec) {
  const auto n = corpus.item_count();
  const auto sizes = split_sizes(n, spec.ratios);
  if (n < 3) throw Error(ErrorCode::kEmptyInput, "splitting needs at least 3 items");
  for (std::size_t t = 0; t < corpus.text.count(); ++t) {
    if (corpus.text_to_image.relevant(t).empty()) {
      throw Error(ErrorCode::kMissingQuery,
                  "text '" + corpus.text.id(t) + "' has no related image; cannot split");
    }
  }
  const auto perm = seeded_permutation(n, spec.seed);
  auto part = [&](std::size_t begin, std::size_t len) {
    std::vector<std::size_t> rows(perm.begin() + static_cast<std::ptrdiff_t>(begin),
                                  perm.begin() + static_cast<std::ptrdiff_t>(begin + len));
    std::sort(rows.begin(), rows.end());
    return select_items(corpus, rows);
  };
  return CorpusSplits{part(0, sizes[0]), part(sizes[0], sizes[1]),
                      part(sizes[0] + sizes[1], sizes[2])};
}

}  // namespace xmodal
