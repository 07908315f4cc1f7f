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

#include "samdistill/core/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

namespace samdistill::core {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Decoded interleaved pixel buffer. channels is 1 or 3 after transforms,
// bit_depth 8 or 16; 16-bit samples are already assembled from the
// big-endian byte stream.
struct RawPng {
  int64_t height = 0;
  int64_t width = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<uint16_t> samples;  // height * width * channels
};

RawPng decode_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open PNG for reading: " + path);

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png_create_info_struct failed");
  }

  // libpng reports errors via longjmp; everything heap-allocated lives in
  // objects declared before this point or owned by libpng itself.
  std::vector<uint8_t> bytes;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("failed to decode PNG: " + path);
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_uint_32 w = png_get_image_width(png, info);
  png_uint_32 h = png_get_image_height(png, info);
  int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if ((color & PNG_COLOR_MASK_ALPHA) || png_get_valid(png, info, PNG_INFO_tRNS))
    png_set_strip_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  color = png_get_color_type(png, info);
  depth = png_get_bit_depth(png, info);
  int channels = png_get_channels(png, info);
  if ((channels != 1 && channels != 3) || (depth != 8 && depth != 16)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("unsupported PNG layout (channels=" +
                  std::to_string(channels) + ", depth=" + std::to_string(depth) +
                  "): " + path);
  }

  size_t rowbytes = png_get_rowbytes(png, info);
  bytes.resize(rowbytes * h);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = bytes.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  RawPng out;
  out.height = static_cast<int64_t>(h);
  out.width = static_cast<int64_t>(w);
  out.channels = channels;
  out.bit_depth = depth;
  out.samples.resize(static_cast<size_t>(out.height) * out.width * channels);
  size_t n = out.samples.size();
  if (depth == 8) {
    for (size_t i = 0; i < n; ++i) out.samples[i] = bytes[i];
  } else {
    // PNG stores 16-bit samples big-endian.
    for (size_t i = 0; i < n; ++i) {
      out.samples[i] = static_cast<uint16_t>((bytes[2 * i] << 8) | bytes[2 * i + 1]);
    }
  }
  return out;
}

void encode_png(const std::string& path, const uint16_t* samples,
                int64_t height, int64_t width, int channels, int bit_depth) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot open PNG for writing: " + path);

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png_create_info_struct failed");
  }

  std::vector<uint8_t> bytes;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed to encode PNG: " + path);
  }

  png_init_io(png, fp.get());
  int color = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, static_cast<png_uint_32>(width),
               static_cast<png_uint_32>(height), bit_depth, color,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  size_t rowbytes = static_cast<size_t>(width) * channels * (bit_depth / 8);
  bytes.resize(rowbytes * static_cast<size_t>(height));
  size_t n = static_cast<size_t>(height) * width * channels;
  if (bit_depth == 8) {
    for (size_t i = 0; i < n; ++i) bytes[i] = static_cast<uint8_t>(samples[i]);
  } else {
    for (size_t i = 0; i < n; ++i) {
      bytes[2 * i] = static_cast<uint8_t>(samples[i] >> 8);
      bytes[2 * i + 1] = static_cast<uint8_t>(samples[i] & 0xff);
    }
  }
  rows.resize(static_cast<size_t>(height));
  for (int64_t y = 0; y < height; ++y)
    rows[static_cast<size_t>(y)] = bytes.data() + static_cast<size_t>(y) * rowbytes;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

uint16_t quantize(double v, int bit_depth) {
  double maxv = bit_depth == 8 ? 255.0 : 65535.0;
  if (v < 0.0) v = 0.0;
  if (v > 1.0) v = 1.0;
  return static_cast<uint16_t>(std::lround(v * maxv));
}

void write_png_image(const std::string& path, const ImageTensor& img,
                     int bit_depth) {
  validate_image(img);
  int64_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
  std::vector<uint16_t> samples(static_cast<size_t>(c * h * w));
  // CHW -> interleaved.
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x)
      for (int64_t ch = 0; ch < c; ++ch)
        samples[static_cast<size_t>((y * w + x) * c + ch)] =
            quantize(img.at3(ch, y, x), bit_depth);
  encode_png(path, samples.data(), h, w, static_cast<int>(c), bit_depth);
}

}  // namespace

ImageTensor read_png(const std::string& path) {
  RawPng raw = decode_png(path);
  double scale = raw.bit_depth == 8 ? 1.0 / 255.0 : 1.0 / 65535.0;
  ImageTensor img({raw.channels, raw.height, raw.width});
  for (int64_t y = 0; y < raw.height; ++y)
    for (int64_t x = 0; x < raw.width; ++x)
      for (int64_t ch = 0; ch < raw.channels; ++ch)
        img.at3(ch, y, x) =
            scale * raw.samples[static_cast<size_t>((y * raw.width + x) *
                                                    raw.channels + ch)];
  return img;
}

void write_png16(const std::string& path, const ImageTensor& img) {
  write_png_image(path, img, 16);
}

void write_png8(const std::string& path, const ImageTensor& img) {
  write_png_image(path, img, 8);
}

std::vector<uint16_t> read_png_labels(const std::string& path, int64_t* height,
                                      int64_t* width) {
  RawPng raw = decode_png(path);
  if (raw.channels != 1) {
    throw IoError("label map must be single channel: " + path);
  }
  *height = raw.height;
  *width = raw.width;
  return std::move(raw.samples);
}

void write_png_labels(const std::string& path,
                      const std::vector<uint16_t>& labels, int64_t height,
                      int64_t width) {
  if (static_cast<int64_t>(labels.size()) != height * width) {
    throw ShapeError("label buffer size mismatch");
  }
  encode_png(path, labels.data(), height, width, 1, 16);
}

std::vector<uint8_t> read_png_gray8(const std::string& path, int64_t* height,
                                    int64_t* width) {
  RawPng raw = decode_png(path);
  if (raw.channels != 1 || raw.bit_depth != 8) {
    throw IoError("expected 8-bit grayscale PNG: " + path);
  }
  *height = raw.height;
  *width = raw.width;
  std::vector<uint8_t> out(raw.samples.size());
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<uint8_t>(raw.samples[i]);
  return out;
}

void write_png_gray8(const std::string& path, const std::vector<uint8_t>& gray,
                     int64_t height, int64_t width) {
  if (static_cast<int64_t>(gray.size()) != height * width) {
    throw ShapeError("gray buffer size mismatch");
  }
  std::vector<uint16_t> samples(gray.begin(), gray.end());
  encode_png(path, samples.data(), height, width, 1, 8);
}

}  // namespace samdistill::core
