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

#include "pcpp/patching.h"

#include <cmath>
#include <string>

#include "pcpp/error.h"

namespace pcpp {

PatchLayout::PatchLayout(std::size_t height, int devices) : height_(height), devices_(devices) {
  if (devices < 1) throw InvalidConfig("device count must be >= 1");
  if (height == 0 || height % static_cast<std::size_t>(devices) != 0) {
    throw InvalidConfig("height " + std::to_string(height) + " is not divisible by " +
                        std::to_string(devices) + " devices");
  }
  patch_height_ = height / static_cast<std::size_t>(devices);
}

std::pair<std::size_t, std::size_t> PatchLayout::rank_range(int rank) const {
  if (rank < 0 || rank >= devices_) throw IndexError("rank " + std::to_string(rank) + " out of range");
  const std::size_t begin = static_cast<std::size_t>(rank) * patch_height_;
  return {begin, begin + patch_height_};
}

int PatchLayout::neighbor_count(int rank) const {
  if (rank < 0 || rank >= devices_) throw IndexError("rank " + std::to_string(rank) + " out of range");
  return (rank > 0 ? 1 : 0) + (rank + 1 < devices_ ? 1 : 0);
}

std::size_t context_rows(double partial, std::size_t patch_height) {
  if (!(partial >= 0.0 && partial <= 1.0)) {
    throw InvalidConfig("partial value must lie in [0, 1], got " + std::to_string(partial));
  }
  const auto rows = static_cast<std::size_t>(std::floor(partial * static_cast<double>(patch_height)));
  if (partial > 0.0 && rows == 0) return 1;
  return rows;
}

std::vector<LatentTensor> split_patches(const LatentTensor& x, const PatchLayout& layout) {
  if (x.height() != layout.height()) throw InvalidConfig("split_patches: layout height does not match tensor");
  std::vector<LatentTensor> patches;
  for (int r = 0; r < layout.devices(); ++r) {
    patches.push_back(x.rows(layout.row_begin(r), layout.patch_height()));
  }
  return patches;
}

LatentTensor reassemble(const std::vector<LatentTensor>& patches) {
  std::vector<const LatentTensor*> parts;
  for (const auto& p : patches) parts.push_back(&p);
  return concat_rows(parts);
}

NeighborContext context_from_neighbors(const LatentTensor* above_patch,
                                       const LatentTensor* below_patch, double partial,
                                       int source_step) {
  NeighborContext ctx;
  ctx.partial = partial;
  ctx.source_step = source_step;
  if (above_patch != nullptr) {
    const std::size_t rows = context_rows(partial, above_patch->height());
    ctx.above = above_patch->rows(above_patch->height() - rows, rows);
  }
  if (below_patch != nullptr) {
    ctx.below = below_patch->rows(0, context_rows(partial, below_patch->height()));
  }
  return ctx;
}

NeighborContext select_neighbor_context(const std::vector<LatentTensor>& stale_patches, int rank,
                                        double partial, const PatchLayout& layout,
                                        int source_step) {
  if (rank < 0 || rank >= layout.devices()) {
    throw IndexError("rank " + std::to_string(rank) + " out of range");
  }
  if (stale_patches.size() != static_cast<std::size_t>(layout.devices())) {
    throw ShapeError("select_neighbor_context: expected one patch per device");
  }
  const LatentTensor* above = rank > 0 ? &stale_patches[rank - 1] : nullptr;
  const LatentTensor* below = rank + 1 < layout.devices() ? &stale_patches[rank + 1] : nullptr;
  return context_from_neighbors(above, below, partial, source_step);
}

LatentTensor kv_source_rows(const LatentTensor& local, const NeighborContext& ctx) {
  const LatentTensor* parts[] = {&ctx.above, &local, &ctx.below};
  return concat_rows(parts);
}

KeysValues assemble_kv(const LatentTensor& local, const NeighborContext& ctx,
                       const AttentionWeights& w) {
  if (local.channels() != w.key.rows()) throw ShapeError("assemble_kv: channel mismatch");
  return project_keys_values(w, kv_source_rows(local, ctx));
}

LatentTensor partially_conditioned_attention(const LatentTensor& local, const NeighborContext& ctx,
                                             const AttentionWeights& w) {
  return attention(w, local, kv_source_rows(local, ctx));
}

namespace {
double mean_row_diff(const LatentTensor& x, std::size_t r) {
  double total = 0.0;
  const std::size_t stride = x.row_stride();
  const auto data = x.data();
  for (std::size_t i = 0; i < stride; ++i) total += std::abs(data[r * stride + i] - data[(r - 1) * stride + i]);
  return total / static_cast<double>(stride);
}
}  // namespace

double seam_discontinuity(const LatentTensor& x, const PatchLayout& layout) {
  if (x.height() != layout.height()) throw InvalidConfig("seam_discontinuity: layout height mismatch");
  double seam = 0.0, interior = 0.0;
  std::size_t seam_pairs = 0, interior_pairs = 0;
  for (std::size_t r = 1; r < x.height(); ++r) {
    if (r % layout.patch_height() == 0) {
      seam += mean_row_diff(x, r);
      ++seam_pairs;
    } else {
      interior += mean_row_diff(x, r);
      ++interior_pairs;
    }
  }
  if (seam_pairs == 0) return 0.0;
  const double seam_mean = seam / static_cast<double>(seam_pairs);
  const double interior_mean = interior_pairs ? interior / static_cast<double>(interior_pairs) : 0.0;
  return seam_mean - interior_mean;
}

}  // namespace pcpp
