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

#include <cstdint>
#include <utility>
#include <vector>

#include "samdistill/core/tensor.hpp"

namespace samdistill::core {

// Images are CHW float64 tensors with values in [0, 1]. C is 1 or 3.
using ImageTensor = Tensor;

// Feature maps are CHW tensors with no range restriction.
using FeatureMap = Tensor;

// Throws ShapeError unless t is a well-formed image (rank 3, C in {1,3},
// positive spatial dims). Value range is checked only when strict is set,
// since intermediate network outputs may legitimately leave [0, 1].
void validate_image(const ImageTensor& t, bool strict_range = false);

// Clamp all entries into [0, 1].
ImageTensor clamp01(ImageTensor img);

// A set of N binary region masks over one H x W grid. Storage is one byte
// per pixel per mask with values 0 or 1. Pixel areas are kept alongside and
// recomputed whenever the mask bits change.
class MaskSet {
 public:
  MaskSet() = default;
  MaskSet(int64_t n, int64_t height, int64_t width);
  MaskSet(int64_t n, int64_t height, int64_t width, std::vector<uint8_t> bits);

  int64_t n() const { return n_; }
  int64_t height() const { return height_; }
  int64_t width() const { return width_; }

  uint8_t at(int64_t i, int64_t y, int64_t x) const {
    return bits_[static_cast<size_t>((i * height_ + y) * width_ + x)];
  }
  void set(int64_t i, int64_t y, int64_t x, uint8_t v) {
    bits_[static_cast<size_t>((i * height_ + y) * width_ + x)] = v ? 1 : 0;
  }

  const std::vector<uint8_t>& bits() const { return bits_; }
  uint8_t* mask_data(int64_t i) {
    return bits_.data() + static_cast<size_t>(i * height_ * width_);
  }
  const uint8_t* mask_data(int64_t i) const {
    return bits_.data() + static_cast<size_t>(i * height_ * width_);
  }

  // Pixel count of mask i; kept in sync by recompute_areas().
  const std::vector<int64_t>& areas() const { return areas_; }
  void recompute_areas();

  // One mask as a float64 H x W tensor of 0/1 values.
  Tensor mask_tensor(int64_t i) const;

  // Index (y * W + x) of the first set pixel in raster order, or H*W if the
  // mask is empty. Used as a deterministic tie-break when sorting by area.
  int64_t first_set_pixel(int64_t i) const;

  bool operator==(const MaskSet& other) const {
    return n_ == other.n_ && height_ == other.height_ &&
           width_ == other.width_ && bits_ == other.bits_;
  }

 private:
  int64_t n_ = 0;
  int64_t height_ = 0;
  int64_t width_ = 0;
  std::vector<uint8_t> bits_;
  std::vector<int64_t> areas_;
};

// Nearest-neighbor resample of a single H x W mask to h x w. Pixel centers
// are mapped proportionally, so the result is exact for integer ratios.
Tensor resize_mask(const Tensor& mask, int64_t h, int64_t w);

// Nearest-neighbor resample of every mask in the set.
MaskSet resize_mask_set(const MaskSet& masks, int64_t h, int64_t w);

}  // namespace samdistill::core
