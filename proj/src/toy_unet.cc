/* Copyright 2026 The PCPP Simulator Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "pcpp/toy_unet.h"

#include <cmath>
#include <random>
#include <string>

#include "pcpp/error.h"
#include "pcpp/noise.h"

namespace pcpp {

std::string_view layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kGroupNorm: return "group_norm";
    case LayerKind::kAttention: return "attention";
    case LayerKind::kConv: return "conv";
  }
  return "unknown";
}

void ModelShape::validate() const {
  if (height < 1 || width < 1 || channels < 1) throw InvalidConfig("model: H, W, C must be >= 1");
  if (blocks < 0) throw InvalidConfig("model: blocks must be >= 0");
  if (groups < 1 || channels % groups != 0) {
    throw InvalidConfig("model: channels must be divisible by groups");
  }
  if (heads < 1 || head_dim < 1) throw InvalidConfig("model: heads and head_dim must be >= 1");
}

namespace {

class WeightSource {
 public:
  explicit WeightSource(std::uint64_t seed) : engine_(keyed_engine({seed, 0x70637070})) {}

  std::vector<double> normal(std::size_t n, double stddev, double mean = 0.0) {
    std::normal_distribution<double> dist(mean, stddev);
    std::vector<double> out(n);
    for (double& v : out) v = dist(engine_);
    return out;
  }

  Matrix matrix(std::size_t rows, std::size_t cols, double stddev) {
    return Matrix(rows, cols, normal(rows * cols, stddev));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace

ToyUNet ToyUNet::build(const ModelShape& shape, std::uint64_t seed) {
  shape.validate();
  ToyUNet model;
  model.shape_ = shape;
  WeightSource src(seed);
  const auto c = static_cast<std::size_t>(shape.channels);
  const auto inner = static_cast<std::size_t>(shape.heads * shape.head_dim);
  const std::size_t emb = 2 * c;
  for (int b = 0; b < shape.blocks; ++b) {
    GroupNormWeights gn;
    gn.groups = shape.groups;
    gn.scale = src.normal(c, 0.1, 1.0);
    gn.shift = src.normal(c, 0.1);
    gn.embed = src.matrix(emb, c, 0.5 / std::sqrt(static_cast<double>(emb)));
    model.layers_.push_back({LayerKind::kGroupNorm, std::move(gn)});

    AttentionWeights at;
    at.heads = shape.heads;
    at.head_dim = shape.head_dim;
    const double qk_std = 0.5 / std::sqrt(static_cast<double>(c));
    at.query = src.matrix(c, inner, qk_std);
    at.key = src.matrix(c, inner, qk_std);
    at.value = src.matrix(c, inner, 1.0 / std::sqrt(static_cast<double>(c)));
    at.out = src.matrix(inner, c, 1.0 / std::sqrt(static_cast<double>(inner)));
    at.out_bias = src.normal(c, 0.1);
    model.layers_.push_back({LayerKind::kAttention, std::move(at)});

    ConvWeights cv;
    cv.in_channels = shape.channels;
    cv.out_channels = shape.channels;
    cv.kernel = src.normal(9 * c * c, 1.0 / std::sqrt(9.0 * static_cast<double>(c)));
    cv.bias = src.normal(c, 0.1);
    model.layers_.push_back({LayerKind::kConv, std::move(cv)});
  }
  return model;
}

ToyUNet ToyUNet::with_zero_weights() const {
  ToyUNet copy = *this;
  for (Layer& layer : copy.layers_) {
    std::visit(
        [](auto& w) {
          using W = std::decay_t<decltype(w)>;
          if constexpr (std::is_same_v<W, GroupNormWeights>) {
            std::fill(w.scale.begin(), w.scale.end(), 0.0);
            w.embed = Matrix(w.embed.rows(), w.embed.cols());
          } else if constexpr (std::is_same_v<W, AttentionWeights>) {
            w.query = Matrix(w.query.rows(), w.query.cols());
            w.key = Matrix(w.key.rows(), w.key.cols());
            w.value = Matrix(w.value.rows(), w.value.cols());
            w.out = Matrix(w.out.rows(), w.out.cols());
          } else {
            std::fill(w.kernel.begin(), w.kernel.end(), 0.0);
          }
        },
        layer.weights);
  }
  return copy;
}

void GroupStats::merge(const GroupStats& other) {
  if (other.count.size() != count.size()) throw ShapeError("GroupStats::merge: group count mismatch");
  for (std::size_t g = 0; g < count.size(); ++g) {
    sum[g].merge(other.sum[g]);
    sum_sq[g].merge(other.sum_sq[g]);
    count[g] += other.count[g];
  }
}

GroupStats compute_group_stats(const LatentTensor& x, int groups) {
  if (groups < 1 || x.channels() % static_cast<std::size_t>(groups) != 0) {
    throw ShapeError("group stats: channels not divisible by groups");
  }
  const std::size_t per_group = x.channels() / static_cast<std::size_t>(groups);
  GroupStats stats;
  stats.sum.resize(static_cast<std::size_t>(groups));
  stats.sum_sq.resize(static_cast<std::size_t>(groups));
  stats.count.assign(static_cast<std::size_t>(groups), 0);
  const auto data = x.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t g = (i % x.channels()) / per_group;
    stats.sum[g].add(data[i]);
    stats.sum_sq[g].add(data[i] * data[i]);
    ++stats.count[g];
  }
  return stats;
}

std::vector<double> embedding_shift(const GroupNormWeights& w, std::span<const double> emb) {
  if (emb.size() != w.embed.rows()) throw ShapeError("embedding dimension mismatch");
  Matrix row(1, emb.size(), std::vector<double>(emb.begin(), emb.end()));
  const Matrix shift = matmul(row, w.embed);
  return {shift.data().begin(), shift.data().end()};
}

LatentTensor group_norm(const GroupNormWeights& w, const LatentTensor& x,
                        const GroupStats& stats, std::span<const double> embed_shift) {
  const std::size_t c = x.channels();
  if (w.scale.size() != c || w.shift.size() != c) throw ShapeError("group_norm: affine size mismatch");
  if (!embed_shift.empty() && embed_shift.size() != c) {
    throw ShapeError("group_norm: embedding shift size mismatch");
  }
  const auto groups = static_cast<std::size_t>(w.groups);
  if (stats.count.size() != groups || c % groups != 0) {
    throw ShapeError("group_norm: statistics do not match group count");
  }
  const std::size_t per_group = c / groups;
  std::vector<double> mean(groups), inv_std(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    if (stats.count[g] == 0) throw ShapeError("group_norm: empty group");
    const auto n = static_cast<double>(stats.count[g]);
    mean[g] = stats.sum[g].value() / n;
    const double var = std::max(0.0, stats.sum_sq[g].value() / n - mean[g] * mean[g]);
    inv_std[g] = 1.0 / std::sqrt(var + kGroupNormEpsilon);
  }
  LatentTensor out(x.height(), x.width(), c);
  const auto in = x.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < in.size(); ++i) {
    const std::size_t ch = i % c;
    const std::size_t g = ch / per_group;
    double v = (in[i] - mean[g]) * inv_std[g] * w.scale[ch] + w.shift[ch];
    if (!embed_shift.empty()) v += embed_shift[ch];
    dst[i] = v;
  }
  return out;
}

KeysValues project_keys_values(const AttentionWeights& w, const LatentTensor& kv_source) {
  const Matrix tokens = to_tokens(kv_source);
  return {matmul(tokens, w.key), matmul(tokens, w.value)};
}

namespace {

void check_attention_shapes(const AttentionWeights& w, const LatentTensor& q, const LatentTensor& kv) {
  if (q.channels() != w.query.rows() || kv.channels() != w.key.rows()) {
    throw ShapeError("attention: channel count does not match projection weights");
  }
  if (kv.size() == 0) throw ShapeError("attention: empty key/value source");
}

// Scores of head h, scaled by 1/sqrt(head_dim).
Matrix head_scores(const Matrix& queries, const Matrix& keys, int head, int head_dim) {
  const std::size_t off = static_cast<std::size_t>(head * head_dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  Matrix scores(queries.rows(), keys.rows());
  for (std::size_t i = 0; i < queries.rows(); ++i) {
    const double* q = queries.row(i).data() + off;
    for (std::size_t j = 0; j < keys.rows(); ++j) {
      const double* k = keys.row(j).data() + off;
      double acc = 0.0;
      for (int d = 0; d < head_dim; ++d) acc += q[d] * k[d];
      scores(i, j) = acc * scale;
    }
  }
  return scores;
}

}  // namespace

Matrix attention_probabilities(const AttentionWeights& w, const LatentTensor& query_source,
                               const LatentTensor& kv_source, int head) {
  check_attention_shapes(w, query_source, kv_source);
  if (head < 0 || head >= w.heads) throw IndexError("attention head out of range");
  const Matrix queries = matmul(to_tokens(query_source), w.query);
  const Matrix keys = matmul(to_tokens(kv_source), w.key);
  return softmax_rows(head_scores(queries, keys, head, w.head_dim));
}

LatentTensor attention(const AttentionWeights& w, const LatentTensor& query_source,
                       const LatentTensor& kv_source) {
  check_attention_shapes(w, query_source, kv_source);
  const Matrix queries = matmul(to_tokens(query_source), w.query);
  const KeysValues kv = project_keys_values(w, kv_source);
  const std::size_t inner = static_cast<std::size_t>(w.heads * w.head_dim);
  Matrix mixed(queries.rows(), inner);
  for (int h = 0; h < w.heads; ++h) {
    const Matrix probs = softmax_rows(head_scores(queries, kv.keys, h, w.head_dim));
    const std::size_t off = static_cast<std::size_t>(h * w.head_dim);
    for (std::size_t i = 0; i < probs.rows(); ++i) {
      double* dst = mixed.row(i).data() + off;
      for (std::size_t j = 0; j < probs.cols(); ++j) {
        const double p = probs(i, j);
        const double* v = kv.values.row(j).data() + off;
        for (int d = 0; d < w.head_dim; ++d) dst[d] += p * v[d];
      }
    }
  }
  Matrix projected = matmul(mixed, w.out);
  for (std::size_t i = 0; i < projected.rows(); ++i) {
    auto row = projected.row(i);
    for (std::size_t ch = 0; ch < row.size(); ++ch) row[ch] += w.out_bias[ch];
  }
  return from_tokens(projected, query_source.height(), query_source.width());
}

LatentTensor conv3x3(const ConvWeights& w, const LatentTensor& x,
                     const LatentTensor* halo_above, const LatentTensor* halo_below) {
  if (x.channels() != static_cast<std::size_t>(w.in_channels)) {
    throw ShapeError("conv3x3: input channels do not match kernel");
  }
  for (const LatentTensor* halo : {halo_above, halo_below}) {
    if (halo != nullptr && (halo->height() != 1 || halo->width() != x.width() ||
                            halo->channels() != x.channels())) {
      throw ShapeError("conv3x3: halo must be a single row matching the input");
    }
  }
  const std::size_t h = x.height(), width = x.width();
  const auto cin = static_cast<std::size_t>(w.in_channels);
  const auto cout = static_cast<std::size_t>(w.out_channels);
  // Extended input: one halo row (or zeros) above and below.
  LatentTensor zero_row(1, width, cin);
  const LatentTensor* parts[] = {halo_above ? halo_above : &zero_row, &x,
                                 halo_below ? halo_below : &zero_row};
  const LatentTensor ext = concat_rows(parts);
  LatentTensor out(h, width, cout);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      for (std::size_t o = 0; o < cout; ++o) {
        double acc = w.bias[o];
        for (int dr = 0; dr < 3; ++dr) {
          const std::size_t er = r + static_cast<std::size_t>(dr);
          for (int dc = 0; dc < 3; ++dc) {
            const long cc = static_cast<long>(c) + dc - 1;
            if (cc < 0 || cc >= static_cast<long>(width)) continue;
            for (std::size_t i = 0; i < cin; ++i) {
              acc += w.k(dr, dc, static_cast<int>(i), static_cast<int>(o)) *
                     ext.at(er, static_cast<std::size_t>(cc), i);
            }
          }
        }
        out.at(r, c, o) = acc;
      }
    }
  }
  return out;
}

std::vector<double> timestep_embedding(int t, int dim) {
  if (dim < 2 || dim % 2 != 0) throw ShapeError("timestep embedding dimension must be even");
  const int half = dim / 2;
  std::vector<double> emb(static_cast<std::size_t>(dim));
  for (int i = 0; i < half; ++i) {
    const double freq = std::pow(10000.0, -static_cast<double>(i) / half);
    emb[static_cast<std::size_t>(i)] = std::sin(t * freq);
    emb[static_cast<std::size_t>(i + half)] = std::cos(t * freq);
  }
  return emb;
}

std::vector<double> condition_embedding(std::int64_t prompt_id, int dim) {
  std::mt19937_64 engine = keyed_engine({static_cast<std::uint64_t>(prompt_id), 0x636f6e64});
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> out(static_cast<std::size_t>(dim));
  for (double& v : out) v = dist(engine);
  return out;
}

std::vector<double> combined_embedding(int t, const Condition& cond, int dim) {
  std::vector<double> emb = timestep_embedding(t, dim);
  if (cond) {
    if (cond->size() != emb.size()) throw ShapeError("condition embedding dimension mismatch");
    for (std::size_t i = 0; i < emb.size(); ++i) emb[i] += (*cond)[i];
  }
  return emb;
}

LatentTensor predict_noise(const ToyUNet& model, const LatentTensor& x, int t,
                           const Condition& cond, AttentionMode mode, const KvSource& kv_source,
                           const LayerObserver& observer) {
  const ModelShape& shape = model.shape();
  if (x.width() != static_cast<std::size_t>(shape.width) ||
      x.channels() != static_cast<std::size_t>(shape.channels)) {
    throw ShapeError("predict_noise: input does not match model shape");
  }
  if (mode == AttentionMode::kPartial && !kv_source) {
    throw InvalidConfig("predict_noise: partial attention needs a key/value source");
  }
  const std::vector<double> emb = combined_embedding(t, cond, model.embedding_dim());
  LatentTensor act = x;
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    const Layer& layer = model.layer(l);
    switch (layer.kind) {
      case LayerKind::kGroupNorm: {
        const auto& w = layer.group_norm();
        act = group_norm(w, act, compute_group_stats(act, w.groups), embedding_shift(w, emb));
        break;
      }
      case LayerKind::kAttention:
        act = mode == AttentionMode::kFull ? attention(layer.attention(), act, act)
                                           : attention(layer.attention(), act, kv_source(l, act));
        break;
      case LayerKind::kConv:
        act = conv3x3(layer.conv(), act, nullptr, nullptr);
        break;
    }
    if (observer) observer(l, act);
  }
  return act;
}

}  // namespace pcpp
