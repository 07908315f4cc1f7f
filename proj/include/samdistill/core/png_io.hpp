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
#include <string>
#include <vector>

#include "samdistill/core/image.hpp"

namespace samdistill::core {

// Reads an 8- or 16-bit grayscale or RGB PNG into a CHW image with values
// scaled to [0, 1] (v / 255 or v / 65535). Palette images are expanded to
// RGB and an alpha channel, if present, is stripped. Samples are taken as
// raw code values; no gamma handling.
ImageTensor read_png(const std::string& path);

// Writes a [0, 1] image as a 16-bit PNG (grayscale for C=1, RGB for C=3).
// Values are clamped and rounded to the nearest code value.
void write_png16(const std::string& path, const ImageTensor& img);

// Same, at 8 bits. Used for mask pages where 16-bit depth buys nothing.
void write_png8(const std::string& path, const ImageTensor& img);

// Raw 16-bit single-channel access, used for label maps: values are the
// integer codes themselves, with no [0, 1] scaling.
std::vector<uint16_t> read_png_labels(const std::string& path, int64_t* height,
                                      int64_t* width);
void write_png_labels(const std::string& path,
                      const std::vector<uint16_t>& labels, int64_t height,
                      int64_t width);

// Raw 8-bit single-channel access, used for stacked mask pages.
std::vector<uint8_t> read_png_gray8(const std::string& path, int64_t* height,
                                    int64_t* width);
void write_png_gray8(const std::string& path, const std::vector<uint8_t>& gray,
                     int64_t height, int64_t width);

}  // namespace samdistill::core
