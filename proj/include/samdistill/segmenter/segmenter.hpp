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

#include <string>

#include "samdistill/core/image.hpp"

namespace samdistill::segmenter {

// Region-mask providers. All of them are pure functions of the image (and,
// for "precomputed", of files on disk): no internal state, no learning.
//
//  * grid: exact tiling into grid_rows x grid_cols rectangles; always a
//    partition of the image.
//  * luminance: quantile bins of Rec.601 luma. Adapts regions to content;
//    degenerate (empty) bins simply vanish, so a constant image yields a
//    single mask.
//  * precomputed: loads <mask_dir>/<sample_id>.mask.{png,json}. mask_dir
//    falls back to the SAMDISTILL_CACHE environment variable; a missing
//    file is an error, never a silent substitution.
struct SegmenterConfig {
  std::string kind = "luminance";  // "grid", "luminance", "precomputed"
  int64_t grid_rows = 2;
  int64_t grid_cols = 4;
  int64_t luminance_bins = 4;
  std::string mask_dir;
  int64_t n_max = 8;
};

// Raw segmentation of an image. sample_id is only consulted by the
// "precomputed" kind. Output masks are not yet canonicalized.
core::MaskSet segment(const core::ImageTensor& img, const SegmenterConfig& cfg,
                      const std::string& sample_id = "");

// Normal form of a mask set: empty masks dropped, remaining masks sorted by
// area descending (ties broken by first set pixel in raster order), at most
// n_max kept, areas recomputed. Idempotent.
core::MaskSet canonicalize(const core::MaskSet& masks, int64_t n_max);

// Rec.601 luma of an RGB (or grayscale) image, [H, W].
core::Tensor luminance_map(const core::ImageTensor& img);

}  // namespace samdistill::segmenter
