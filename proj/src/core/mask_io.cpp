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

#include "samdistill/core/mask_io.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "samdistill/core/png_io.hpp"

namespace samdistill::core {

namespace {

using nlohmann::json;

bool masks_disjoint(const MaskSet& m) {
  int64_t hw = m.height() * m.width();
  std::vector<uint8_t> covered(static_cast<size_t>(hw), 0);
  for (int64_t i = 0; i < m.n(); ++i) {
    const uint8_t* bits = m.mask_data(i);
    for (int64_t p = 0; p < hw; ++p) {
      if (bits[p]) {
        if (covered[static_cast<size_t>(p)]) return false;
        covered[static_cast<size_t>(p)] = 1;
      }
    }
  }
  return true;
}

}  // namespace

void write_mask_set(const std::string& base_path, const MaskSet& masks,
                    const std::string& source) {
  if (masks.n() > 65535) {
    throw ShapeError("mask set too large for label encoding");
  }
  std::string layout = masks_disjoint(masks) ? "labels" : "stacked";
  int64_t h = masks.height(), w = masks.width();

  if (layout == "labels") {
    std::vector<uint16_t> labels(static_cast<size_t>(h * w), 0);
    for (int64_t i = 0; i < masks.n(); ++i) {
      const uint8_t* bits = masks.mask_data(i);
      for (int64_t p = 0; p < h * w; ++p) {
        if (bits[p]) labels[static_cast<size_t>(p)] = static_cast<uint16_t>(i + 1);
      }
    }
    write_png_labels(base_path + ".mask.png", labels, h, w);
  } else {
    std::vector<uint8_t> pages(static_cast<size_t>(masks.n() * h * w), 0);
    for (int64_t i = 0; i < masks.n(); ++i) {
      const uint8_t* bits = masks.mask_data(i);
      for (int64_t p = 0; p < h * w; ++p) {
        pages[static_cast<size_t>(i * h * w + p)] = bits[p] ? 255 : 0;
      }
    }
    write_png_gray8(base_path + ".mask.png", pages, masks.n() * h, w);
  }

  json meta;
  meta["version"] = 1;
  meta["n"] = masks.n();
  meta["height"] = h;
  meta["width"] = w;
  meta["areas"] = masks.areas();
  meta["source"] = source;
  meta["layout"] = layout;
  std::ofstream out(base_path + ".mask.json");
  if (!out) throw IoError("cannot write mask sidecar: " + base_path);
  out << meta.dump(2) << "\n";
}

MaskSet read_mask_set(const std::string& base_path, MaskFileInfo* info) {
  std::string png_path = base_path + ".mask.png";
  std::string json_path = base_path + ".mask.json";
  if (!std::filesystem::exists(png_path) || !std::filesystem::exists(json_path)) {
    throw MissingMaskError("mask files not found for base path: " + base_path);
  }

  json meta;
  {
    std::ifstream in(json_path);
    if (!in) throw IoError("cannot read mask sidecar: " + json_path);
    try {
      in >> meta;
    } catch (const json::exception& e) {
      throw IoError("malformed mask sidecar " + json_path + ": " + e.what());
    }
  }
  int64_t n = meta.at("n").get<int64_t>();
  int64_t h = meta.at("height").get<int64_t>();
  int64_t w = meta.at("width").get<int64_t>();
  std::string layout = meta.at("layout").get<std::string>();

  MaskSet masks(n, h, w);
  if (layout == "labels") {
    int64_t ph = 0, pw = 0;
    std::vector<uint16_t> labels = read_png_labels(png_path, &ph, &pw);
    if (ph != h || pw != w) {
      throw IoError("label map dims disagree with sidecar: " + png_path);
    }
    for (int64_t p = 0; p < h * w; ++p) {
      uint16_t v = labels[static_cast<size_t>(p)];
      if (v == 0) continue;
      if (v > n) throw IoError("label exceeds mask count in " + png_path);
      masks.set(v - 1, p / w, p % w, 1);
    }
  } else if (layout == "stacked") {
    int64_t ph = 0, pw = 0;
    std::vector<uint8_t> pages = read_png_gray8(png_path, &ph, &pw);
    if (ph != n * h || pw != w) {
      throw IoError("stacked mask dims disagree with sidecar: " + png_path);
    }
    for (int64_t i = 0; i < n; ++i) {
      for (int64_t p = 0; p < h * w; ++p) {
        masks.set(i, p / w, p % w,
                  pages[static_cast<size_t>(i * h * w + p)] >= 128 ? 1 : 0);
      }
    }
  } else {
    throw IoError("unknown mask layout '" + layout + "' in " + json_path);
  }
  masks.recompute_areas();

  if (meta.contains("areas")) {
    auto areas = meta.at("areas").get<std::vector<int64_t>>();
    if (areas != masks.areas()) {
      throw IoError("sidecar areas disagree with mask pixels: " + json_path);
    }
  }
  if (info) {
    info->n = n;
    info->height = h;
    info->width = w;
    info->areas = masks.areas();
    info->source = meta.value("source", "");
    info->layout = layout;
  }
  return masks;
}

}  // namespace samdistill::core
