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

#include <cstdlib>
#include <filesystem>

#include "doctest.h"
#include "samdistill/core/instrument.hpp"
#include "samdistill/core/mask_io.hpp"
#include "samdistill/segmenter/segmenter.hpp"

using namespace samdistill;
using namespace samdistill::core;
using namespace samdistill::segmenter;

namespace {

Tensor gradient_image(int64_t h, int64_t w) {
  Tensor img({3, h, w});
  for (int64_t c = 0; c < 3; ++c) {
    for (int64_t y = 0; y < h; ++y) {
      for (int64_t x = 0; x < w; ++x) {
        img.at3(c, y, x) = double(y * w + x) / double(h * w - 1);
      }
    }
  }
  return img;
}

}  // namespace

TEST_CASE("grid segmenter tiles the image exactly") {
  SegmenterConfig cfg;
  cfg.kind = "grid";
  cfg.grid_rows = 2;
  cfg.grid_cols = 4;

  Tensor img = gradient_image(10, 14);
  counters().reset();
  MaskSet m = segment(img, cfg);
  CHECK(counters().segmenter_calls == 1);
  REQUIRE(m.n() == 8);

  // Cells partition the image: every pixel covered exactly once.
  int64_t total = 0;
  for (int64_t i = 0; i < m.n(); ++i) total += m.areas()[i];
  CHECK(total == 10 * 14);
  // Cell (0,0) holds the top-left pixel, cell (1,3) the bottom-right one.
  CHECK(m.at(0, 0, 0) == 1);
  CHECK(m.at(7, 9, 13) == 1);
}

TEST_CASE("luminance segmenter bins by brightness quantiles") {
  SegmenterConfig cfg;
  cfg.kind = "luminance";
  cfg.luminance_bins = 4;

  Tensor img = gradient_image(8, 8);
  MaskSet m = segment(img, cfg);
  REQUIRE(m.n() == 4);
  int64_t total = 0;
  for (int64_t i = 0; i < m.n(); ++i) {
    CHECK(m.areas()[i] > 0);
    total += m.areas()[i];
  }
  CHECK(total == 64);

  // A constant image has one occupied bin; empty bins are dropped.
  Tensor flat({3, 8, 8}, 0.5);
  MaskSet mc = segment(flat, cfg);
  CHECK(mc.n() == 1);
  CHECK(mc.areas()[0] == 64);
}

TEST_CASE("segmentation is a pure function of the image") {
  SegmenterConfig cfg;
  cfg.kind = "luminance";
  Tensor img = gradient_image(9, 7);
  CHECK(segment(img, cfg, "x") == segment(img, cfg, "y"));
}

TEST_CASE("canonicalize orders masks by area then first pixel and caps count") {
  MaskSet m(3, 4, 4);
  // Mask 0: 2 pixels; mask 1: 8 pixels; mask 2: 2 pixels, earlier pixel.
  m.set(0, 3, 2, 1);
  m.set(0, 3, 3, 1);
  for (int64_t p = 0; p < 8; ++p) m.set(1, p / 4, p % 4, 1);
  m.set(2, 2, 0, 1);
  m.set(2, 2, 1, 1);
  m.recompute_areas();

  MaskSet c = canonicalize(m, 8);
  REQUIRE(c.n() == 3);
  CHECK(c.areas()[0] == 8);
  CHECK(c.areas()[1] == 2);
  CHECK(c.at(1, 2, 0) == 1);  // ties broken by first set pixel
  CHECK(c.at(2, 3, 2) == 1);

  MaskSet capped = canonicalize(m, 2);
  CHECK(capped.n() == 2);
  CHECK(capped.areas()[0] == 8);

  // Idempotent: canonical input comes back unchanged.
  CHECK(canonicalize(c, 8) == c);
}

TEST_CASE("precomputed segmenter reads sidecar masks and reports misses") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "sd_seg_test";
  fs::create_directories(dir);

  MaskSet m(2, 6, 6);
  for (int64_t p = 0; p < 12; ++p) m.set(0, p / 6, p % 6, 1);
  for (int64_t p = 12; p < 36; ++p) m.set(1, p / 6, p % 6, 1);
  m.recompute_areas();
  write_mask_set((dir / "img_a").string(), m, "test");

  SegmenterConfig cfg;
  cfg.kind = "precomputed";
  cfg.mask_dir = dir.string();
  Tensor img = gradient_image(6, 6);
  CHECK(segment(img, cfg, "img_a") == m);
  CHECK_THROWS_AS(segment(img, cfg, "img_b"), MissingMaskError);

  // Without mask_dir the environment override supplies the cache root.
  SegmenterConfig bare;
  bare.kind = "precomputed";
  CHECK_THROWS_AS(segment(img, bare, "img_a"), ConfigError);
  setenv("SAMDISTILL_CACHE", dir.string().c_str(), 1);
  CHECK(segment(img, bare, "img_a") == m);
  unsetenv("SAMDISTILL_CACHE");
  fs::remove_all(dir);
}

TEST_CASE("unknown segmenter kind is rejected") {
  SegmenterConfig cfg;
  cfg.kind = "head-count";
  CHECK_THROWS_AS(segment(gradient_image(4, 4), cfg), ConfigError);
}
