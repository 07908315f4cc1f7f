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

#include <cstdio>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "samdistill/core/mask_io.hpp"
#include "samdistill/core/metrics.hpp"
#include "samdistill/core/png_io.hpp"
#include "samdistill/core/rng.hpp"

using namespace samdistill;
using namespace samdistill::core;

namespace {

std::string temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "samdistill_io_test";
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace

TEST_CASE("16-bit png round-trip is lossless to quantization") {
  Rng rng(21);
  ImageTensor img({3, 20, 14});
  for (int64_t i = 0; i < img.numel(); ++i) img[i] = rng.uniform();
  std::string path = temp_dir() + "/rt16.png";
  write_png16(path, img);
  ImageTensor back = read_png(path);
  CHECK(back.same_shape(img));
  // 16-bit quantization error is at most 1/(2*65535) per sample.
  for (int64_t i = 0; i < img.numel(); ++i)
    CHECK(std::abs(back[i] - img[i]) <= 0.5 / 65535.0 + 1e-12);
  // Round-tripping the decoded image is exact.
  write_png16(path, back);
  ImageTensor back2 = read_png(path);
  for (int64_t i = 0; i < img.numel(); ++i) CHECK(back2[i] == back[i]);
}

TEST_CASE("grayscale png round-trip") {
  ImageTensor img({1, 9, 11});
  for (int64_t i = 0; i < img.numel(); ++i)
    img[i] = static_cast<double>(i) / static_cast<double>(img.numel());
  std::string path = temp_dir() + "/gray.png";
  write_png16(path, img);
  ImageTensor back = read_png(path);
  CHECK(back.dim(0) == 1);
  for (int64_t i = 0; i < img.numel(); ++i)
    CHECK(std::abs(back[i] - img[i]) <= 0.5 / 65535.0 + 1e-12);
}

TEST_CASE("reading a missing png raises IoError") {
  CHECK_THROWS_AS(read_png(temp_dir() + "/does_not_exist.png"), IoError);
}

TEST_CASE("reading a corrupt png raises IoError") {
  std::string path = temp_dir() + "/corrupt.png";
  std::FILE* f = std::fopen(path.c_str(), "wb");
  REQUIRE(f);
  std::fputs("not a png at all", f);
  std::fclose(f);
  CHECK_THROWS_AS(read_png(path), IoError);
}

TEST_CASE("disjoint mask sets round-trip through the label layout") {
  MaskSet m(3, 8, 8);
  for (int64_t y = 0; y < 8; ++y)
    for (int64_t x = 0; x < 8; ++x) {
      int64_t which = (y * 8 + x) % 3;
      m.set(which, y, x, 1);
    }
  m.recompute_areas();

  std::string base = temp_dir() + "/disjoint";
  write_mask_set(base, m, "unit-test");
  MaskFileInfo info;
  MaskSet back = read_mask_set(base, &info);
  CHECK(info.layout == "labels");
  CHECK(info.source == "unit-test");
  CHECK(info.n == 3);
  CHECK(back == m);
  CHECK(back.areas() == m.areas());
}

TEST_CASE("overlapping mask sets round-trip through the stacked layout") {
  MaskSet m(2, 6, 6);
  for (int64_t y = 0; y < 6; ++y)
    for (int64_t x = 0; x < 6; ++x) {
      if (x < 4) m.set(0, y, x, 1);
      if (x > 1) m.set(1, y, x, 1);  // columns 2..3 overlap
    }
  m.recompute_areas();

  std::string base = temp_dir() + "/overlap";
  write_mask_set(base, m, "unit-test");
  MaskFileInfo info;
  MaskSet back = read_mask_set(base, &info);
  CHECK(info.layout == "stacked");
  CHECK(back == m);
}

TEST_CASE("missing mask files raise MissingMaskError") {
  CHECK_THROWS_AS(read_mask_set(temp_dir() + "/no_such_mask"), MissingMaskError);
}

TEST_CASE("sidecar area mismatch is detected") {
  MaskSet m(1, 4, 4);
  m.set(0, 0, 0, 1);
  m.recompute_areas();
  std::string base = temp_dir() + "/tampered";
  write_mask_set(base, m, "unit-test");

  // Rewrite the sidecar with a wrong area count.
  std::string sidecar = base + ".mask.json";
  std::FILE* f = std::fopen(sidecar.c_str(), "wb");
  REQUIRE(f);
  std::fputs(
      "{\"version\":1,\"n\":1,\"height\":4,\"width\":4,\"areas\":[9],"
      "\"source\":\"x\",\"layout\":\"labels\"}",
      f);
  std::fclose(f);
  CHECK_THROWS_AS(read_mask_set(base), IoError);
}
