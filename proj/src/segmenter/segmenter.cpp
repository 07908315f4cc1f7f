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

#include "samdistill/segmenter/segmenter.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <vector>

#include "samdistill/core/instrument.hpp"
#include "samdistill/core/mask_io.hpp"

namespace samdistill::segmenter {

namespace {

using core::ImageTensor;
using core::MaskSet;

MaskSet segment_grid(const ImageTensor& img, int64_t rows, int64_t cols) {
  if (rows < 1 || cols < 1) throw ConfigError("grid segmenter needs rows, cols >= 1");
  int64_t h = img.dim(1), w = img.dim(2);
  MaskSet out(rows * cols, h, w);
  for (int64_t y = 0; y < h; ++y) {
    int64_t r = std::min(rows - 1, y * rows / h);
    for (int64_t x = 0; x < w; ++x) {
      int64_t c = std::min(cols - 1, x * cols / w);
      out.set(r * cols + c, y, x, 1);
    }
  }
  out.recompute_areas();
  return out;
}

MaskSet segment_luminance(const ImageTensor& img, int64_t bins) {
  if (bins < 1) throw ConfigError("luminance segmenter needs bins >= 1");
  core::Tensor luma = luminance_map(img);
  int64_t h = luma.dim(0), w = luma.dim(1);
  int64_t n = h * w;

  // Quantile thresholds from the sorted luma values. Duplicate thresholds
  // (flat regions) collapse bins, so some bins can come out empty.
  std::vector<double> sorted(luma.data(), luma.data() + n);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> cuts;
  for (int64_t b = 1; b < bins; ++b) {
    cuts.push_back(sorted[static_cast<size_t>(b * n / bins)]);
  }

  MaskSet binned(bins, h, w);
  for (int64_t p = 0; p < n; ++p) {
    double v = luma[p];
    // Index = number of cuts <= v, so every pixel lands in exactly one bin.
    int64_t bin = static_cast<int64_t>(
        std::upper_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
    binned.set(bin, p / w, p % w, 1);
  }
  binned.recompute_areas();

  // Empty bins vanish; a constant image yields a single full mask.
  int64_t kept = 0;
  for (int64_t i = 0; i < bins; ++i)
    if (binned.areas()[i] > 0) kept++;
  MaskSet out(kept, h, w);
  int64_t next = 0;
  for (int64_t i = 0; i < bins; ++i) {
    if (binned.areas()[i] == 0) continue;
    std::copy(binned.mask_data(i), binned.mask_data(i) + h * w,
              out.mask_data(next++));
  }
  out.recompute_areas();
  return out;
}

MaskSet segment_precomputed(const SegmenterConfig& cfg,
                            const std::string& sample_id) {
  if (sample_id.empty()) {
    throw ConfigError("precomputed segmenter needs a sample id");
  }
  std::string dir = cfg.mask_dir;
  if (dir.empty()) {
    const char* env = std::getenv("SAMDISTILL_CACHE");
    if (env && *env) dir = env;
  }
  if (dir.empty()) {
    throw ConfigError(
        "precomputed segmenter needs mask_dir or SAMDISTILL_CACHE");
  }
  return core::read_mask_set(dir + "/" + sample_id);
}

}  // namespace

core::Tensor luminance_map(const ImageTensor& img) {
  core::validate_image(img);
  int64_t h = img.dim(1), w = img.dim(2);
  core::Tensor luma({h, w});
  if (img.dim(0) == 1) {
    for (int64_t p = 0; p < h * w; ++p) luma[p] = img[p];
    return luma;
  }
  const double* r = img.data();
  const double* g = img.data() + h * w;
  const double* b = img.data() + 2 * h * w;
  for (int64_t p = 0; p < h * w; ++p) {
    luma[p] = 0.299 * r[p] + 0.587 * g[p] + 0.114 * b[p];
  }
  return luma;
}

MaskSet segment(const ImageTensor& img, const SegmenterConfig& cfg,
                const std::string& sample_id) {
  core::validate_image(img);
  core::counters().segmenter_calls++;
  if (cfg.kind == "grid") return segment_grid(img, cfg.grid_rows, cfg.grid_cols);
  if (cfg.kind == "luminance") return segment_luminance(img, cfg.luminance_bins);
  if (cfg.kind == "precomputed") {
    MaskSet m = segment_precomputed(cfg, sample_id);
    if (m.height() != img.dim(1) || m.width() != img.dim(2)) {
      throw ShapeError("precomputed masks for '" + sample_id +
                       "' do not match the image size");
    }
    return m;
  }
  throw ConfigError("unknown segmenter kind '" + cfg.kind + "'");
}

MaskSet canonicalize(const MaskSet& masks, int64_t n_max) {
  if (n_max < 1) throw ConfigError("canonicalize needs n_max >= 1");
  struct Entry {
    int64_t index;
    int64_t area;
    int64_t first;
  };
  std::vector<Entry> entries;
  for (int64_t i = 0; i < masks.n(); ++i) {
    int64_t area = masks.areas()[static_cast<size_t>(i)];
    if (area == 0) continue;
    entries.push_back({i, area, masks.first_set_pixel(i)});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.area != b.area) return a.area > b.area;
    return a.first < b.first;
  });
  if (static_cast<int64_t>(entries.size()) > n_max) {
    entries.resize(static_cast<size_t>(n_max));
  }

  MaskSet out(static_cast<int64_t>(entries.size()), masks.height(),
              masks.width());
  int64_t hw = masks.height() * masks.width();
  for (size_t k = 0; k < entries.size(); ++k) {
    const uint8_t* src = masks.mask_data(entries[k].index);
    uint8_t* dst = out.mask_data(static_cast<int64_t>(k));
    std::copy(src, src + hw, dst);
  }
  out.recompute_areas();
  return out;
}

}  // namespace samdistill::segmenter
