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

#ifndef PCPP_TOY_UNET_H_
#define PCPP_TOY_UNET_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "pcpp/exact_sum.h"
#include "pcpp/tensor.h"

namespace pcpp {

enum class LayerKind { kGroupNorm, kAttention, kConv };

std::string_view layer_kind_name(LayerKind kind);

// Per-channel affine group norm. The timestep/condition embedding enters here:
// embed ((2C) x C) projects it to a per-channel shift added after the affine.
struct GroupNormWeights {
  int groups = 1;
  std::vector<double> scale;
  std::vector<double> shift;
  Matrix embed;
};

struct AttentionWeights {
  int heads = 1;
  int head_dim = 1;
  Matrix query;  // C x (heads*head_dim)
  Matrix key;
  Matrix value;
  Matrix out;    // (heads*head_dim) x C
  std::vector<double> out_bias;
};

// 3x3 convolution, kernel laid out [dr][dc][in][out].
struct ConvWeights {
  int in_channels = 0;
  int out_channels = 0;
  std::vector<double> kernel;
  std::vector<double> bias;

  double k(int dr, int dc, int in, int out) const {
    return kernel[((static_cast<std::size_t>(dr) * 3 + dc) * in_channels + in) * out_channels + out];
  }
};

struct Layer {
  LayerKind kind;
  std::variant<GroupNormWeights, AttentionWeights, ConvWeights> weights;

  const GroupNormWeights& group_norm() const { return std::get<GroupNormWeights>(weights); }
  const AttentionWeights& attention() const { return std::get<AttentionWeights>(weights); }
  const ConvWeights& conv() const { return std::get<ConvWeights>(weights); }
};

struct ModelShape {
  int height = 16;
  int width = 16;
  int channels = 8;
  // Each block is group_norm -> attention -> conv, so L = 3 * blocks.
  int blocks = 2;
  int groups = 4;
  int heads = 2;
  int head_dim = 4;

  int layer_count() const { return 3 * blocks; }
  void validate() const;
};

// Flat stack of [group_norm -> attention -> conv3x3] blocks mapping C
// channels to C channels, weights drawn from a seeded generator.
class ToyUNet {
 public:
  static ToyUNet build(const ModelShape& shape, std::uint64_t seed);

  const ModelShape& shape() const { return shape_; }
  const std::vector<Layer>& layers() const { return layers_; }
  const Layer& layer(std::size_t l) const { return layers_.at(l); }
  std::size_t layer_count() const { return layers_.size(); }
  int embedding_dim() const { return 2 * shape_.channels; }

  // Same architecture with every multiplicative weight set to zero; biases and
  // group-norm shifts are kept.
  ToyUNet with_zero_weights() const;

 private:
  ModelShape shape_;
  std::vector<Layer> layers_;
};

// Per-group partial statistics. Exact accumulation makes merge order irrelevant.
struct GroupStats {
  std::vector<ExactSum> sum;
  std::vector<ExactSum> sum_sq;
  std::vector<std::int64_t> count;

  void merge(const GroupStats& other);
};

GroupStats compute_group_stats(const LatentTensor& x, int groups);

inline constexpr double kGroupNormEpsilon = 1e-6;

// Normalizes x with the given (possibly cross-device) statistics, applies the
// per-channel affine and adds embed_shift (length C, may be empty).
LatentTensor group_norm(const GroupNormWeights& w, const LatentTensor& x,
                        const GroupStats& stats, std::span<const double> embed_shift);

// Per-channel shift contributed by the embedding: emb^T * w.embed.
std::vector<double> embedding_shift(const GroupNormWeights& w, std::span<const double> emb);

struct KeysValues {
  Matrix keys;    // tokens x (heads*head_dim)
  Matrix values;
};

KeysValues project_keys_values(const AttentionWeights& w, const LatentTensor& kv_source);

// Multi-head scaled dot-product attention. Queries come from query_source,
// keys and values from kv_source; output has query_source's shape.
LatentTensor attention(const AttentionWeights& w, const LatentTensor& query_source,
                       const LatentTensor& kv_source);

// Softmax weights of one head: (query tokens) x (kv tokens).
Matrix attention_probabilities(const AttentionWeights& w, const LatentTensor& query_source,
                               const LatentTensor& kv_source, int head);

// 3x3 convolution over x. halo_above/halo_below are single rows adjacent to
// x's first/last row; nullptr means zero padding. Columns are zero padded.
LatentTensor conv3x3(const ConvWeights& w, const LatentTensor& x,
                     const LatentTensor* halo_above, const LatentTensor* halo_below);

// Sinusoidal embedding of timestep t, dimension dim (even).
std::vector<double> timestep_embedding(int t, int dim);

// Seeded pseudo text embedding for an integer prompt id.
std::vector<double> condition_embedding(std::int64_t prompt_id, int dim);

// Unconditional passes use std::nullopt.
using Condition = std::optional<std::vector<double>>;

std::vector<double> combined_embedding(int t, const Condition& cond, int dim);

enum class AttentionMode {
  kFull,     // keys/values from the whole input
  kPartial,  // keys/values supplied by a KvSource
};

// Produces the key/value source rows for attention layer `layer` given the
// local input activation.
using KvSource = std::function<LatentTensor(std::size_t layer, const LatentTensor& local)>;
using LayerObserver = std::function<void(std::size_t layer, const LatentTensor& output)>;

// Noise prediction at schedule timestep t. Group norm and conv treat x as the
// whole image; only attention can be redirected through kv_source.
LatentTensor predict_noise(const ToyUNet& model, const LatentTensor& x, int t,
                           const Condition& cond, AttentionMode mode = AttentionMode::kFull,
                           const KvSource& kv_source = {},
                           const LayerObserver& observer = {});

}  // namespace pcpp

#endif  // PCPP_TOY_UNET_H_
