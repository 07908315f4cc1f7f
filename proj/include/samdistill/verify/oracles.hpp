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

namespace samdistill::verify {

// Plain scalar-loop references, written against the documented definitions
// rather than the library's code paths, so the two can arbitrate each other.
// Everything computes in double.

// Mean over entries of: 0.5 d^2 for |d| <= 1, |d| - 0.5 otherwise.
double ref_smooth_l1(const core::Tensor& a, const core::Tensor& b);

// Cosine similarities between explicitly materialized gated vectors. Every
// feature channel is multiplied by the mask value at each pixel and the
// result flattened to one long vector per mask; masks act as arbitrary real
// gates, never as index sets. Masks whose gated vector has norm <= 1e-8 are
// dropped; kept maps surviving rows back to input mask indices.
struct RefRelation {
  std::vector<std::vector<double>> values;
  std::vector<int64_t> kept;
};
RefRelation ref_relation_matrix(const core::Tensor& feats,
                                const core::MaskSet& masks);

// Mean |r1 - r2| over the m^2 - m ordered off-diagonal pairs.
double ref_sgr(const RefRelation& r1, const RefRelation& r2);

double ref_mse(const core::Tensor& a, const core::Tensor& b);
double ref_psnr(const core::Tensor& a, const core::Tensor& b);

// Direct (non-separable) sliding-window SSIM: an 11x11 Gaussian window with
// sigma 1.5 applied at every fully valid position, per channel, then
// averaged. K1 = 0.01, K2 = 0.03, dynamic range 1.
double ref_ssim(const core::Tensor& a, const core::Tensor& b);

}  // namespace samdistill::verify
