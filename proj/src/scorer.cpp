#include "xmodal/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "xmodal/error.hpp"
#include "xmodal/parallel.hpp"
#include "xmodal/rng.hpp"

namespace xmodal {
namespace {

using nlohmann::json;

template <typename T>
std::vector<double> partial_first_layer(const DenseLayer& layer, std::size_t offset,
                                        std::span<const T> values) {
  std::vector<double> out(layer.out, 0.0);
  for (std::size_t k = 0; k < layer.out; ++k) {
    const double* w = layer.weights.data() + k * layer.in + offset;
    double s = 0.0;
    for (std::size_t c = 0; c < values.size(); ++c) s += w[c] * static_cast<double>(values[c]);
    out[k] = s;
  }
  return out;
}

std::string base64_encode(std::span<const double> values) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(values.data());
  const int n = static_cast<int>(values.size_bytes());
  std::string out(4 * ((values.size_bytes() + 2) / 3), '\0');
  const int written =
      EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes, n);
  out.resize(static_cast<std::size_t>(written));
  return out;
}

std::vector<double> base64_decode(const std::string& text, std::size_t expected) {
  if (text.size() % 4 != 0) throw Error(ErrorCode::kParse, "malformed base64 payload");
  std::vector<unsigned char> raw(text.size() / 4 * 3);
  const int n = EVP_DecodeBlock(raw.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw Error(ErrorCode::kParse, "malformed base64 payload");
  // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
  std::size_t len = static_cast<std::size_t>(n);
  if (!text.empty() && text.back() == '=') --len;
  if (text.size() > 1 && text[text.size() - 2] == '=') --len;
  if (len != expected * sizeof(double)) {
    throw Error(ErrorCode::kParse, "layer payload has " + std::to_string(len) +
                                       " bytes, expected " +
                                       std::to_string(expected * sizeof(double)));
  }
  std::vector<double> out(expected);
  std::memcpy(out.data(), raw.data(), len);
  return out;
}

}  // namespace

std::string_view loss_name(LossKind loss) {
  return loss == LossKind::kMse ? "mse" : "contrastive";
}

LossKind parse_loss(std::string_view name) {
  if (name == "mse") return LossKind::kMse;
  if (name == "contrastive") return LossKind::kContrastive;
  throw Error(ErrorCode::kInvalidArgument, "unknown loss '" + std::string(name) + "'");
}

ScorerModel::ScorerModel(std::size_t text_dim, std::size_t image_dim,
                         std::vector<std::size_t> hidden_sizes)
    : text_dim_(text_dim), image_dim_(image_dim), hidden_sizes_(std::move(hidden_sizes)) {
  if (text_dim_ == 0 || image_dim_ == 0) {
    throw Error(ErrorCode::kInvalidArgument, "scorer input halves must be non-empty");
  }
  if (hidden_sizes_.empty() || hidden_sizes_.size() > 5) {
    throw Error(ErrorCode::kInvalidArgument, "scorer needs 1 to 5 hidden layers");
  }
  std::size_t in = input_dim();
  auto add = [&](std::size_t out) {
    if (out == 0) throw Error(ErrorCode::kInvalidArgument, "hidden layer sizes must be positive");
    layers_.push_back(DenseLayer{in, out, std::vector<double>(in * out, 0.0),
                                 std::vector<double>(out, 0.0)});
    in = out;
  };
  for (auto h : hidden_sizes_) add(h);
  add(1);
}

ScorerModel ScorerModel::initialized(std::size_t text_dim, std::size_t image_dim,
                                     std::vector<std::size_t> hidden_sizes, std::uint64_t seed) {
  ScorerModel model(text_dim, image_dim, std::move(hidden_sizes));
  model.seed = seed;
  Rng rng(seed);
  for (auto& layer : model.layers_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    for (auto& w : layer.weights) w = rng.uniform(-limit, limit);
  }
  return model;
}

std::size_t ScorerModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.biases.size();
  return n;
}

std::vector<double> ScorerModel::parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& l : layers_) {
    out.insert(out.end(), l.weights.begin(), l.weights.end());
    out.insert(out.end(), l.biases.begin(), l.biases.end());
  }
  return out;
}

void ScorerModel::set_parameters(std::span<const double> values) {
  if (values.size() != parameter_count()) {
    throw Error(ErrorCode::kDimensionMismatch, "parameter vector has wrong length");
  }
  std::size_t pos = 0;
  for (auto& l : layers_) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), l.weights.size(),
                l.weights.begin());
    pos += l.weights.size();
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), l.biases.size(),
                l.biases.begin());
    pos += l.biases.size();
  }
}

std::vector<double> ScorerModel::project_text(std::span<const float> text) const {
  if (text.size() != text_dim_) {
    throw Error(ErrorCode::kDimensionMismatch, "text embedding has wrong dim for scorer");
  }
  return partial_first_layer(layers_.front(), 0, text);
}

std::vector<double> ScorerModel::project_image(std::span<const float> image) const {
  if (image.size() != image_dim_) {
    throw Error(ErrorCode::kDimensionMismatch, "image embedding has wrong dim for scorer");
  }
  return partial_first_layer(layers_.front(), text_dim_, image);
}

double ScorerModel::forward_from_projections(std::span<const double> text_part,
                                             std::span<const double> image_part) const {
  const auto& first = layers_.front();
  std::vector<double> act(first.out);
  for (std::size_t k = 0; k < first.out; ++k) {
    act[k] = std::max(0.0, (text_part[k] + image_part[k]) + first.biases[k]);
  }
  std::vector<double> next;
  for (std::size_t l = 1; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    next.assign(layer.out, 0.0);
    for (std::size_t k = 0; k < layer.out; ++k) {
      const double* w = layer.weights.data() + k * layer.in;
      double s = 0.0;
      for (std::size_t c = 0; c < layer.in; ++c) s += w[c] * act[c];
      s += layer.biases[k];
      next[k] = l + 1 == layers_.size() ? std::tanh(s) : std::max(0.0, s);
    }
    act.swap(next);
  }
  return act.front();
}

double ScorerModel::forward(std::span<const float> text, std::span<const float> image) const {
  return forward_from_projections(project_text(text), project_image(image));
}

double ScorerModel::forward(std::span<const double> text, std::span<const double> image) const {
  if (text.size() != text_dim_ || image.size() != image_dim_) {
    throw Error(ErrorCode::kDimensionMismatch, "input halves have wrong dims for scorer");
  }
  return forward_from_projections(partial_first_layer(layers_.front(), 0, text),
                                  partial_first_layer(layers_.front(), text_dim_, image));
}

double ScorerModel::forward(std::span<const double> input) const {
  if (input.size() != input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "scorer input has " + std::to_string(input.size()) + " values, expected " +
                    std::to_string(input_dim()));
  }
  return forward(input.first(text_dim_), input.subspan(text_dim_));
}

double per_query_loss(std::span<const double> d_hat, std::size_t positive_index) {
  if (positive_index >= d_hat.size()) {
    throw Error(ErrorCode::kOutOfRange, "positive index out of range");
  }
  double s = 0.0;
  for (std::size_t j = 0; j < d_hat.size(); ++j) {
    s += contrastive_pair_loss(d_hat[j], j == positive_index);
  }
  return s / static_cast<double>(d_hat.size());
}

double per_query_loss(const ScorerModel& model, std::span<const float> query,
                      const std::vector<std::span<const float>>& candidates,
                      std::size_t positive_index) {
  if (positive_index >= candidates.size()) {
    throw Error(ErrorCode::kOutOfRange, "positive index out of range");
  }
  std::vector<double> d(candidates.size());
  for (std::size_t j = 0; j < candidates.size(); ++j) d[j] = model.forward(query, candidates[j]);
  return per_query_loss(d, positive_index);
}

std::vector<double> pair_loss_matrix(std::span<const double> d_hat, std::size_t n) {
  if (d_hat.size() != n * n) throw Error(ErrorCode::kDimensionMismatch, "score matrix not N x N");
  std::vector<double> out(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = contrastive_pair_loss(d_hat[i * n + j], i == j);
  }
  return out;
}

DatasetLoss dataset_loss_from_scores(std::span<const double> d_hat, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kEmptyInput, "dataset loss of an empty corpus");
  const auto losses = pair_loss_matrix(d_hat, n);
  const double dn = static_cast<double>(n);
  DatasetLoss out;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    double col = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row += losses[i * n + j];
      col += losses[j * n + i];
    }
    out.text_side += row / dn;
    out.image_side += col / dn;
  }
  out.text_side /= dn;
  out.image_side /= dn;
  return out;
}

double dataset_loss(const ScorerModel& model, const EmbeddingSet& text, const EmbeddingSet& image,
                    LossSide side) {
  if (text.count() != image.count()) {
    throw Error(ErrorCode::kCountMismatch, "dataset loss needs a one-to-one corpus");
  }
  const auto m = score_matrix(model, text, image);
  const auto loss = dataset_loss_from_scores(m.values, text.count());
  switch (side) {
    case LossSide::kText: return loss.text_side;
    case LossSide::kImage: return loss.image_side;
    case LossSide::kBoth: return 0.5 * (loss.text_side + loss.image_side);
  }
  return loss.text_side;
}

double mse_loss(const ScorerModel& model, std::span<const MseSample> batch) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyInput, "MSE of an empty batch");
  double s = 0.0;
  for (const auto& sample : batch) {
    const double e = model.forward(sample.text, sample.image) - sample.target;
    s += e * e;
  }
  return s / static_cast<double>(batch.size());
}

ScoreMatrix score_matrix(const ScorerModel& model, const EmbeddingSet& text,
                         const EmbeddingSet& image) {
  if (text.dim() != model.text_dim() || image.dim() != model.image_dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "scorer expects dims " + std::to_string(model.text_dim()) + " + " +
                    std::to_string(model.image_dim()) + ", got " + std::to_string(text.dim()) +
                    " + " + std::to_string(image.dim()));
  }
  std::vector<std::vector<double>> text_parts(text.count());
  std::vector<std::vector<double>> image_parts(image.count());
  parallel_for(text.count(), [&](std::size_t i) { text_parts[i] = model.project_text(text.row(i)); });
  parallel_for(image.count(),
               [&](std::size_t j) { image_parts[j] = model.project_image(image.row(j)); });

  ScoreMatrix m;
  m.orientation = Orientation::kSimilarity;
  m.rows = text.count();
  m.cols = image.count();
  m.values.resize(m.rows * m.cols);
  m.row_ids = text.ids();
  m.col_ids = image.ids();
  parallel_for(m.rows, [&](std::size_t i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      m.values[i * m.cols + j] = model.forward_from_projections(text_parts[i], image_parts[j]);
    }
  });
  return m;
}

std::string encode_model(const ScorerModel& model) {
  json doc;
  doc["format"] = "xmodal-scorer";
  doc["version"] = 1;
  doc["input_dim"] = model.input_dim();
  doc["text_dim"] = model.text_dim();
  doc["image_dim"] = model.image_dim();
  doc["hidden_sizes"] = model.hidden_sizes();
  doc["seed"] = model.seed;
  doc["loss"] = loss_name(model.loss);
  doc["hidden_activation"] = "relu";
  doc["output_activation"] = "tanh";
  doc["encoding"] = "base64-f64le";
  json layers = json::array();
  for (const auto& l : model.layers()) {
    layers.push_back({{"in", l.in},
                      {"out", l.out},
                      {"weights", base64_encode(l.weights)},
                      {"biases", base64_encode(l.biases)}});
  }
  doc["layers"] = std::move(layers);
  return doc.dump(2);
}

ScorerModel decode_model(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format") != "xmodal-scorer" || doc.at("version") != 1) {
      throw Error(ErrorCode::kUnsupportedVersion, "not an xmodal scorer v1 model file");
    }
    ScorerModel model(doc.at("text_dim").get<std::size_t>(), doc.at("image_dim").get<std::size_t>(),
                      doc.at("hidden_sizes").get<std::vector<std::size_t>>());
    if (doc.at("input_dim").get<std::size_t>() != model.input_dim()) {
      throw Error(ErrorCode::kParse, "input_dim disagrees with text_dim + image_dim");
    }
    model.seed = doc.at("seed").get<std::uint64_t>();
    model.loss = parse_loss(doc.at("loss").get<std::string>());
    const auto& layers = doc.at("layers");
    if (layers.size() != model.layers().size()) {
      throw Error(ErrorCode::kParse, "layer count disagrees with hidden_sizes");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
      auto& l = model.layers()[i];
      if (layers[i].at("in").get<std::size_t>() != l.in ||
          layers[i].at("out").get<std::size_t>() != l.out) {
        throw Error(ErrorCode::kParse, "layer " + std::to_string(i) + " has inconsistent shape");
      }
      l.weights = base64_decode(layers[i].at("weights").get<std::string>(), l.in * l.out);
      l.biases = base64_decode(layers[i].at("biases").get<std::string>(), l.out);
    }
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed model file: ") + e.what());
  }
}

void save_model(const ScorerModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out << encode_model(model) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

ScorerModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_model(buf.str());
}

}  // namespace xmodal
