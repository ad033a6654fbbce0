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

#ifndef PCPP_PATCHING_H_
#define PCPP_PATCHING_H_

#include <cstddef>
#include <utility>
#include <vector>

#include "pcpp/tensor.h"
#include "pcpp/toy_unet.h"

namespace pcpp {

// Horizontal split of an H-row grid into n equal bands, rank i owning rows
// [i*h, (i+1)*h).
class PatchLayout {
 public:
  PatchLayout(std::size_t height, int devices);

  int devices() const { return devices_; }
  std::size_t height() const { return height_; }
  std::size_t patch_height() const { return patch_height_; }
  std::pair<std::size_t, std::size_t> rank_range(int rank) const;
  std::size_t row_begin(int rank) const { return rank_range(rank).first; }
  // Number of adjacent ranks (0, 1 or 2).
  int neighbor_count(int rank) const;

 private:
  std::size_t height_;
  int devices_;
  std::size_t patch_height_;
};

// Rows of neighbor context per present side: floor(p*h), raised to 1 when p > 0
// would otherwise round to nothing.
std::size_t context_rows(double partial, std::size_t patch_height);

struct NeighborContext {
  LatentTensor above;  // lower rows of rank-1's patch, or empty
  LatentTensor below;  // upper rows of rank+1's patch, or empty
  int source_step = 0;
  double partial = 0.0;
};

std::vector<LatentTensor> split_patches(const LatentTensor& x, const PatchLayout& layout);
LatentTensor reassemble(const std::vector<LatentTensor>& patches);

// Neighbor context for `rank` from patches produced at source_step.
NeighborContext select_neighbor_context(const std::vector<LatentTensor>& stale_patches, int rank,
                                        double partial, const PatchLayout& layout,
                                        int source_step = 0);

// Same selection when only the two neighbors' tensors are at hand (either may
// be nullptr at an image border).
NeighborContext context_from_neighbors(const LatentTensor* above_patch,
                                       const LatentTensor* below_patch, double partial,
                                       int source_step = 0);

// Key/value source rows in token order [above, local, below].
LatentTensor kv_source_rows(const LatentTensor& local, const NeighborContext& ctx);

KeysValues assemble_kv(const LatentTensor& local, const NeighborContext& ctx,
                       const AttentionWeights& w);

// Queries from the local patch only; keys/values from assemble_kv.
LatentTensor partially_conditioned_attention(const LatentTensor& local, const NeighborContext& ctx,
                                             const AttentionWeights& w);

// Mean |row_r - row_{r-1}| over row pairs straddling a patch boundary minus
// the same mean over all other adjacent row pairs.
double seam_discontinuity(const LatentTensor& x, const PatchLayout& layout);

}  // namespace pcpp

#endif  // PCPP_PATCHING_H_
