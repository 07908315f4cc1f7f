// Copyright 2026 The samdistill Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <vector>

#include "samdistill/core/image.hpp"

namespace samdistill::distill {

// Masks whose gated features have Euclidean norm at or below this are
// dropped from relation statistics; cosine similarity is undefined there.
inline constexpr double kDegenerateNorm = 1e-8;

// Pairwise cosine similarities between mask-gated feature vectors.
// values is [m, m] over the surviving masks; kept maps row/column index
// back to the original mask index. The diagonal is exactly 1.
struct RelationMatrix {
  core::Tensor values;
  std::vector<int64_t> kept;
};

// feats: [C, h, w]; masks must already live on the same h x w grid. Gating
// multiplies every feature channel by the mask, flattens, and compares by
// cosine. Degenerate masks (empty, or zeroed by the features) are dropped.
// With require_pairs set, fewer than two surviving masks raise
// DegenerateRelationError; otherwise the matrix is just small.
RelationMatrix relation_matrix(const core::FeatureMap& feats,
                               const core::MaskSet& masks,
                               bool require_pairs = true);

// Mean absolute difference between the off-diagonal entries of two relation
// matrices of equal size. The diagonal never contributes.
double relation_gap(const RelationMatrix& a, const RelationMatrix& b);

}  // namespace samdistill::distill
