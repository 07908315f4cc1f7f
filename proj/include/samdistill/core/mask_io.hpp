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

namespace samdistill::core {

// On-disk mask format: <base>.mask.png plus a <base>.mask.json sidecar.
//
// Two PNG layouts exist. "labels" is a 16-bit label map (0 = background,
// mask i = pixels with value i+1) and only represents non-overlapping masks.
// "stacked" is an 8-bit grayscale image of height n*H whose pages are the
// individual masks (0 / 255); it supports overlap. The writer picks
// "labels" when masks are disjoint and "stacked" otherwise.
//
// Sidecar fields: version, n, height, width, areas (pixel counts), source
// (free-form producer tag), layout.
struct MaskFileInfo {
  int64_t n = 0;
  int64_t height = 0;
  int64_t width = 0;
  std::vector<int64_t> areas;
  std::string source;
  std::string layout;
};

void write_mask_set(const std::string& base_path, const MaskSet& masks,
                    const std::string& source);

// Throws MissingMaskError when either file is absent.
MaskSet read_mask_set(const std::string& base_path,
                      MaskFileInfo* info = nullptr);

}  // namespace samdistill::core
