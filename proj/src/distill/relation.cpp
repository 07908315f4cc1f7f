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

#include "samdistill/distill/relation.hpp"

#include <cmath>

namespace samdistill::distill {

RelationMatrix relation_matrix(const core::FeatureMap& feats,
                               const core::MaskSet& masks,
                               bool require_pairs) {
  if (feats.rank() != 3) {
    throw ShapeError("relation_matrix: features must be CHW");
  }
  const int64_t c = feats.dim(0), h = feats.dim(1), w = feats.dim(2);
  if (masks.height() != h || masks.width() != w) {
    throw ShapeError("relation_matrix: masks are " +
                     std::to_string(masks.height()) + "x" +
                     std::to_string(masks.width()) + " but features are " +
                     std::to_string(h) + "x" + std::to_string(w));
  }
  const int64_t hw = h * w;

  // Gated vectors, kept implicit: entry (i, flat) = feats[flat] * mask_i.
  std::vector<int64_t> kept;
  std::vector<double> norms;
  for (int64_t i = 0; i < masks.n(); ++i) {
    const uint8_t* m = masks.mask_data(i);
    double acc = 0.0;
    for (int64_t ch = 0; ch < c; ++ch) {
      const double* f = feats.data() + ch * hw;
      for (int64_t p = 0; p < hw; ++p) {
        if (m[p]) acc += f[p] * f[p];
      }
    }
    double norm = std::sqrt(acc);
    if (norm > kDegenerateNorm) {
      kept.push_back(i);
      norms.push_back(norm);
    }
  }

  if (require_pairs && kept.size() < 2) {
    throw DegenerateRelationError(
        "relation matrix needs at least two non-degenerate masks, have " +
        std::to_string(kept.size()));
  }

  const int64_t m = static_cast<int64_t>(kept.size());
  RelationMatrix out;
  out.kept = kept;
  out.values = core::Tensor({m, m});
  for (int64_t a = 0; a < m; ++a) {
    out.values.at2(a, a) = 1.0;
    const uint8_t* ma = masks.mask_data(kept[static_cast<size_t>(a)]);
    for (int64_t b = a + 1; b < m; ++b) {
      const uint8_t* mb = masks.mask_data(kept[static_cast<size_t>(b)]);
      double dot = 0.0;
      for (int64_t ch = 0; ch < c; ++ch) {
        const double* f = feats.data() + ch * hw;
        for (int64_t p = 0; p < hw; ++p) {
          if (ma[p] && mb[p]) dot += f[p] * f[p];
        }
      }
      double v = dot / (norms[static_cast<size_t>(a)] * norms[static_cast<size_t>(b)]);
      out.values.at2(a, b) = v;
      out.values.at2(b, a) = v;
    }
  }
  return out;
}

double relation_gap(const RelationMatrix& a, const RelationMatrix& b) {
  a.values.check_same_shape(b.values, "relation_gap");
  const int64_t m = a.values.rank() == 2 ? a.values.dim(0) : 0;
  if (m < 2) {
    throw DegenerateRelationError("relation_gap needs matrices of size >= 2");
  }
  double acc = 0.0;
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < m; ++j)
      if (i != j) acc += std::abs(a.values.at2(i, j) - b.values.at2(i, j));
  return acc / static_cast<double>(m * m - m);
}

}  // namespace samdistill::distill
