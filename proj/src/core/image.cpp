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

#include "samdistill/core/image.hpp"

#include <algorithm>

namespace samdistill::core {

void validate_image(const ImageTensor& t, bool strict_range) {
  if (t.rank() != 3) {
    throw ShapeError("image must be rank 3 (CHW), got " +
                     shape_str(t.shape()));
  }
  int64_t c = t.dim(0);
  if (c != 1 && c != 3) {
    throw ShapeError("image channel count must be 1 or 3, got " +
                     std::to_string(c));
  }
  if (t.dim(1) <= 0 || t.dim(2) <= 0) {
    throw ShapeError("image spatial dims must be positive, got " +
                     shape_str(t.shape()));
  }
  if (strict_range) {
    for (int64_t i = 0; i < t.numel(); ++i) {
      double v = t[i];
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ShapeError("image value " + std::to_string(v) +
                         " outside [0,1] at flat index " + std::to_string(i));
      }
    }
  }
}

ImageTensor clamp01(ImageTensor img) {
  for (int64_t i = 0; i < img.numel(); ++i) {
    img[i] = std::min(1.0, std::max(0.0, img[i]));
  }
  return img;
}

MaskSet::MaskSet(int64_t n, int64_t height, int64_t width)
    : n_(n),
      height_(height),
      width_(width),
      bits_(static_cast<size_t>(n * height * width), 0),
      areas_(static_cast<size_t>(n), 0) {
  if (n < 0 || height <= 0 || width <= 0) {
    throw ShapeError("MaskSet dims must be positive (n may be 0)");
  }
}

MaskSet::MaskSet(int64_t n, int64_t height, int64_t width,
                 std::vector<uint8_t> bits)
    : n_(n), height_(height), width_(width), bits_(std::move(bits)) {
  if (n < 0 || height <= 0 || width <= 0) {
    throw ShapeError("MaskSet dims must be positive (n may be 0)");
  }
  if (static_cast<int64_t>(bits_.size()) != n * height * width) {
    throw ShapeError("MaskSet bit buffer size mismatch");
  }
  for (auto& b : bits_) b = b ? 1 : 0;
  recompute_areas();
}

void MaskSet::recompute_areas() {
  areas_.assign(static_cast<size_t>(n_), 0);
  int64_t hw = height_ * width_;
  for (int64_t i = 0; i < n_; ++i) {
    const uint8_t* m = mask_data(i);
    int64_t a = 0;
    for (int64_t p = 0; p < hw; ++p) a += m[p];
    areas_[static_cast<size_t>(i)] = a;
  }
}

Tensor MaskSet::mask_tensor(int64_t i) const {
  Tensor out({height_, width_});
  const uint8_t* m = mask_data(i);
  for (int64_t p = 0; p < height_ * width_; ++p)
    out[p] = static_cast<double>(m[p]);
  return out;
}

int64_t MaskSet::first_set_pixel(int64_t i) const {
  const uint8_t* m = mask_data(i);
  int64_t hw = height_ * width_;
  for (int64_t p = 0; p < hw; ++p)
    if (m[p]) return p;
  return hw;
}

Tensor resize_mask(const Tensor& mask, int64_t h, int64_t w) {
  if (mask.rank() != 2) {
    throw ShapeError("resize_mask expects a rank-2 mask, got " +
                     shape_str(mask.shape()));
  }
  if (h <= 0 || w <= 0) throw ShapeError("resize_mask target must be >= 1");
  int64_t in_h = mask.dim(0), in_w = mask.dim(1);
  Tensor out({h, w});
  for (int64_t y = 0; y < h; ++y) {
    int64_t sy = std::min<int64_t>(
        in_h - 1, static_cast<int64_t>((static_cast<double>(y) + 0.5) *
                                       static_cast<double>(in_h) /
                                       static_cast<double>(h)));
    for (int64_t x = 0; x < w; ++x) {
      int64_t sx = std::min<int64_t>(
          in_w - 1, static_cast<int64_t>((static_cast<double>(x) + 0.5) *
                                         static_cast<double>(in_w) /
                                         static_cast<double>(w)));
      out.at2(y, x) = mask.at2(sy, sx);
    }
  }
  return out;
}

MaskSet resize_mask_set(const MaskSet& masks, int64_t h, int64_t w) {
  MaskSet out(masks.n(), h, w);
  for (int64_t i = 0; i < masks.n(); ++i) {
    Tensor r = resize_mask(masks.mask_tensor(i), h, w);
    for (int64_t y = 0; y < h; ++y)
      for (int64_t x = 0; x < w; ++x)
        out.set(i, y, x, r.at2(y, x) > 0.5 ? 1 : 0);
  }
  out.recompute_areas();
  return out;
}

}  // namespace samdistill::core
