#include "xmodal/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xmodal/error.hpp"
#include "xmodal/metrics.hpp"
#include "xmodal/rng.hpp"

namespace xmodal {

PairBlock PairBlock::in_batch(std::vector<std::size_t> text_rows,
                              std::vector<std::size_t> image_rows) {
  if (text_rows.size() != image_rows.size()) {
    throw Error(ErrorCode::kCountMismatch, "in-batch block needs paired rows");
  }
  const std::size_t b = text_rows.size();
  PairBlock block{std::move(text_rows), std::move(image_rows),
                  std::vector<std::uint8_t>(b * b, 0)};
  for (std::size_t i = 0; i < b; ++i) block.positive[i * b + i] = 1;
  return block;
}

double block_objective(const ScorerModel& model, const EmbeddingSet& text,
                       const EmbeddingSet& image, const PairBlock& block, LossKind loss,
                       std::vector<double>* gradient) {
  const std::size_t nt = block.text_rows.size();
  const std::size_t ni = block.image_rows.size();
  if (nt == 0 || ni == 0) throw Error(ErrorCode::kEmptyInput, "empty pair block");
  if (block.positive.size() != nt * ni) {
    throw Error(ErrorCode::kDimensionMismatch, "positive mask does not match block shape");
  }
  if (loss == LossKind::kMse && text.dim() != image.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "MSE targets need equal text/image dims");
  }
  const auto& layers = model.layers();
  const std::size_t depth = layers.size();
  const std::size_t h1 = layers.front().out;

  std::vector<std::vector<double>> text_parts(nt), image_parts(ni);
  for (std::size_t i = 0; i < nt; ++i) text_parts[i] = model.project_text(text.row(block.text_rows[i]));
  for (std::size_t j = 0; j < ni; ++j) {
    image_parts[j] = model.project_image(image.row(block.image_rows[j]));
  }

  const bool want_grad = gradient != nullptr;
  // Gradient buffers per layer, same layout as DenseLayer.
  std::vector<std::vector<double>> gw(depth), gb(depth);
  std::vector<std::vector<double>> text_delta, image_delta;
  if (want_grad) {
    for (std::size_t l = 0; l < depth; ++l) {
      gw[l].assign(layers[l].weights.size(), 0.0);
      gb[l].assign(layers[l].out, 0.0);
    }
    text_delta.assign(nt, std::vector<double>(h1, 0.0));
    image_delta.assign(ni, std::vector<double>(h1, 0.0));
  }

  // Per-pair activations: pre[l] and post[l] for each layer.
  std::vector<std::vector<double>> pre(depth), post(depth), delta(depth);
  for (std::size_t l = 0; l < depth; ++l) {
    pre[l].resize(layers[l].out);
    post[l].resize(layers[l].out);
    delta[l].resize(layers[l].out);
  }

  const double scale = 1.0 / static_cast<double>(nt * ni);
  double total = 0.0;
  for (std::size_t i = 0; i < nt; ++i) {
    for (std::size_t j = 0; j < ni; ++j) {
      const auto& first = layers.front();
      for (std::size_t k = 0; k < h1; ++k) {
        pre[0][k] = (text_parts[i][k] + image_parts[j][k]) + first.biases[k];
        post[0][k] = std::max(0.0, pre[0][k]);
      }
      for (std::size_t l = 1; l < depth; ++l) {
        const auto& layer = layers[l];
        for (std::size_t k = 0; k < layer.out; ++k) {
          const double* w = layer.weights.data() + k * layer.in;
          double s = 0.0;
          for (std::size_t c = 0; c < layer.in; ++c) s += w[c] * post[l - 1][c];
          s += layer.biases[k];
          pre[l][k] = s;
          post[l][k] = l + 1 == depth ? std::tanh(s) : std::max(0.0, s);
        }
      }
      const double out = post[depth - 1][0];
      double d_out = 0.0;
      if (loss == LossKind::kContrastive) {
        const bool positive = block.positive[i * ni + j] != 0;
        total += contrastive_pair_loss(out, positive);
        d_out = positive ? out - 1.0 : out + 1.0;
      } else {
        const double target = score(Metric::kCosine, text.row(block.text_rows[i]),
                                    image.row(block.image_rows[j]));
        const double e = out - target;
        total += e * e;
        d_out = 2.0 * e;
      }
      if (!want_grad) continue;

      delta[depth - 1][0] = scale * d_out * (1.0 - out * out);
      for (std::size_t l = depth - 1; l >= 1; --l) {
        const auto& layer = layers[l];
        auto& prev_delta = delta[l - 1];
        std::fill(prev_delta.begin(), prev_delta.end(), 0.0);
        for (std::size_t k = 0; k < layer.out; ++k) {
          const double dk = delta[l][k];
          gb[l][k] += dk;
          if (dk == 0.0) continue;
          double* gwk = gw[l].data() + k * layer.in;
          const double* w = layer.weights.data() + k * layer.in;
          for (std::size_t c = 0; c < layer.in; ++c) {
            gwk[c] += dk * post[l - 1][c];
            prev_delta[c] += w[c] * dk;
          }
        }
        for (std::size_t c = 0; c < layer.in; ++c) {
          if (pre[l - 1][c] <= 0.0) prev_delta[c] = 0.0;
        }
      }
      for (std::size_t k = 0; k < h1; ++k) {
        const double dk = delta[0][k];
        gb[0][k] += dk;
        text_delta[i][k] += dk;
        image_delta[j][k] += dk;
      }
    }
  }

  if (want_grad) {
    const auto& first = layers.front();
    const std::size_t td = model.text_dim();
    for (std::size_t i = 0; i < nt; ++i) {
      const auto x = text.row(block.text_rows[i]);
      for (std::size_t k = 0; k < h1; ++k) {
        const double dk = text_delta[i][k];
        if (dk == 0.0) continue;
        double* g = gw[0].data() + k * first.in;
        for (std::size_t c = 0; c < td; ++c) g[c] += dk * static_cast<double>(x[c]);
      }
    }
    for (std::size_t j = 0; j < ni; ++j) {
      const auto y = image.row(block.image_rows[j]);
      for (std::size_t k = 0; k < h1; ++k) {
        const double dk = image_delta[j][k];
        if (dk == 0.0) continue;
        double* g = gw[0].data() + k * first.in + td;
        for (std::size_t c = 0; c < y.size(); ++c) g[c] += dk * static_cast<double>(y[c]);
      }
    }
    gradient->clear();
    gradient->reserve(model.parameter_count());
    for (std::size_t l = 0; l < depth; ++l) {
      gradient->insert(gradient->end(), gw[l].begin(), gw[l].end());
      gradient->insert(gradient->end(), gb[l].begin(), gb[l].end());
    }
  }
  return total * scale;
}

GradientCheckResult gradient_check(const ScorerModel& model, const EmbeddingSet& text,
                                   const EmbeddingSet& image, const PairBlock& block,
                                   LossKind loss, const GradientCheckOptions& options) {
  std::vector<double> analytic;
  block_objective(model, text, image, block, loss, &analytic);
  const std::size_t n = analytic.size();

  std::vector<std::size_t> indices = seeded_permutation(n, options.seed);
  indices.resize(std::min(n, options.parameters_to_check));
  if (options.corrupt_parameter) {
    const auto p = *options.corrupt_parameter;
    if (p >= n) throw Error(ErrorCode::kOutOfRange, "corrupt_parameter out of range");
    analytic[p] *= options.corrupt_factor;
    if (std::find(indices.begin(), indices.end(), p) == indices.end()) indices.push_back(p);
  }

  ScorerModel probe = model;
  auto params = model.parameters();
  GradientCheckResult result;
  for (auto idx : indices) {
    const double original = params[idx];
    params[idx] = original + options.step;
    probe.set_parameters(params);
    const double up = block_objective(probe, text, image, block, loss);
    params[idx] = original - options.step;
    probe.set_parameters(params);
    const double down = block_objective(probe, text, image, block, loss);
    params[idx] = original;
    const double numeric = (up - down) / (2.0 * options.step);
    const double err = std::abs(analytic[idx] - numeric) / std::max(1e-8, std::abs(numeric));
    if (result.checked == 0 || err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_parameter = idx;
    }
    ++result.checked;
  }
  return result;
}

}  // namespace xmodal
