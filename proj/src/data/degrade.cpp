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

#include "samdistill/data/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace samdistill::data {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Mirror an index into [0, n): ..., 2, 1, 0 | 0, 1, 2, ... | n-1, n-2, ...
int64_t reflect(int64_t i, int64_t n) {
  if (i < 0) return -i - 1;
  if (i >= n) return 2 * n - i - 1;
  return i;
}

}  // namespace

core::ImageTensor add_rain_streaks(const core::ImageTensor& clean,
                                   const RainSpec& spec, core::Rng& rng) {
  core::validate_image(clean);
  if (spec.streak_count < 0 || spec.length <= 0.0 || spec.width <= 0.0) {
    throw ConfigError("rain spec needs non-negative count, positive geometry");
  }
  int64_t c = clean.dim(0), h = clean.dim(1), w = clean.dim(2);
  std::vector<double> layer(static_cast<size_t>(h * w), 0.0);

  for (int64_t k = 0; k < spec.streak_count; ++k) {
    double cy = rng.uniform(0.0, static_cast<double>(h));
    double cx = rng.uniform(0.0, static_cast<double>(w));
    double ang = (spec.angle_deg +
                  spec.angle_jitter_deg * rng.uniform(-1.0, 1.0)) *
                 kPi / 180.0;
    double len = spec.length * rng.uniform(0.7, 1.3);
    double amp = spec.intensity *
                 rng.uniform(1.0 - spec.intensity_jitter,
                             1.0 + spec.intensity_jitter);
    // Direction from vertical: angle 0 falls straight down the y axis.
    double dy = std::cos(ang), dx = std::sin(ang);
    double half = 0.5 * len;
    double sigma_along = half / 1.5;  // taper reaches ~1/3 peak at the tips
    double reach = 2.5 * spec.width;

    for (double t = -half; t <= half; t += 0.5) {
      double py = cy + t * dy;
      double px = cx + t * dx;
      double taper = std::exp(-(t * t) / (2.0 * sigma_along * sigma_along));
      int64_t y0 = static_cast<int64_t>(std::floor(py - reach));
      int64_t y1 = static_cast<int64_t>(std::ceil(py + reach));
      int64_t x0 = static_cast<int64_t>(std::floor(px - reach));
      int64_t x1 = static_cast<int64_t>(std::ceil(px + reach));
      for (int64_t y = std::max<int64_t>(0, y0); y <= std::min(h - 1, y1); ++y) {
        for (int64_t x = std::max<int64_t>(0, x0); x <= std::min(w - 1, x1);
             ++x) {
          double ddy = static_cast<double>(y) - py;
          double ddx = static_cast<double>(x) - px;
          double d2 = ddy * ddy + ddx * ddx;
          double v = amp * taper *
                     std::exp(-d2 / (2.0 * spec.width * spec.width));
          double& cell = layer[static_cast<size_t>(y * w + x)];
          // Overlapping stamps take the max, so a streak's own samples at
          // 0.5 px spacing do not pile up into a bead chain.
          cell = std::max(cell, v);
        }
      }
    }
  }

  core::ImageTensor out = clean;
  for (int64_t ch = 0; ch < c; ++ch) {
    double* dst = out.data() + ch * h * w;
    for (int64_t p = 0; p < h * w; ++p) {
      dst[p] = std::min(1.0, dst[p] + layer[static_cast<size_t>(p)]);
    }
  }
  return out;
}

core::ImageTensor gaussian_blur(const core::ImageTensor& img,
                                const BlurSpec& spec) {
  core::validate_image(img);
  if (spec.sigma <= 0.0) throw ConfigError("blur sigma must be positive");
  if (spec.kernel < 1 || spec.kernel % 2 == 0) {
    throw ConfigError("blur kernel must be odd and >= 1");
  }
  int64_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
  if (spec.kernel > h || spec.kernel > w) {
    throw ShapeError("blur kernel " + std::to_string(spec.kernel) +
                     " exceeds image " + std::to_string(h) + "x" +
                     std::to_string(w));
  }

  int64_t k = spec.kernel, half = k / 2;
  std::vector<double> taps(static_cast<size_t>(k));
  double sum = 0.0;
  for (int64_t i = 0; i < k; ++i) {
    double d = static_cast<double>(i - half);
    taps[static_cast<size_t>(i)] =
        std::exp(-(d * d) / (2.0 * spec.sigma * spec.sigma));
    sum += taps[static_cast<size_t>(i)];
  }
  for (auto& t : taps) t /= sum;

  core::ImageTensor out(img.shape());
  std::vector<double> tmp(static_cast<size_t>(h * w));
  for (int64_t ch = 0; ch < c; ++ch) {
    const double* src = img.data() + ch * h * w;
    // Horizontal pass with reflected borders.
    for (int64_t y = 0; y < h; ++y) {
      for (int64_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int64_t t = -half; t <= half; ++t) {
          acc += taps[static_cast<size_t>(t + half)] *
                 src[y * w + reflect(x + t, w)];
        }
        tmp[static_cast<size_t>(y * w + x)] = acc;
      }
    }
    double* dst = out.data() + ch * h * w;
    for (int64_t y = 0; y < h; ++y) {
      for (int64_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int64_t t = -half; t <= half; ++t) {
          acc += taps[static_cast<size_t>(t + half)] *
                 tmp[static_cast<size_t>(reflect(y + t, h) * w + x)];
        }
        dst[y * w + x] = acc;
      }
    }
  }
  return out;
}

core::ImageTensor add_gaussian_noise(const core::ImageTensor& img,
                                     const NoiseSpec& spec, core::Rng& rng) {
  core::validate_image(img);
  if (!(spec.sigma > 0.0)) {
    throw ConfigError("noise sigma must be strictly positive");
  }
  core::ImageTensor out = img;
  for (int64_t i = 0; i < out.numel(); ++i) {
    out[i] = std::min(1.0, std::max(0.0, out[i] + spec.sigma * rng.normal()));
  }
  return out;
}

core::ImageTensor degrade(const core::ImageTensor& clean,
                          const DegradationSpec& spec, core::Rng& rng) {
  if (spec.kind == "rain") return add_rain_streaks(clean, spec.rain, rng);
  if (spec.kind == "blur") return gaussian_blur(clean, spec.blur);
  if (spec.kind == "noise") return add_gaussian_noise(clean, spec.noise, rng);
  throw ConfigError("unknown degradation kind '" + spec.kind + "'");
}

core::ImageTensor make_texture(int64_t height, int64_t width, core::Rng& rng) {
  if (height < 4 || width < 4) throw ShapeError("texture must be at least 4x4");
  core::ImageTensor img({3, height, width});

  // Layered value noise: random lattices upsampled bilinearly.
  auto add_octave = [&](int64_t cells, double weight) {
    std::vector<double> lattice(static_cast<size_t>((cells + 1) * (cells + 1)));
    for (auto& v : lattice) v = rng.uniform();
    for (int64_t ch = 0; ch < 3; ++ch) {
      // One lattice per octave shared across channels would be gray; shift
      // the sampling phase per channel for mild chroma variation instead of
      // drawing three lattices (cheaper, still colorful).
      double phase = 0.13 * static_cast<double>(ch);
      double* dst = img.data() + ch * height * width;
      for (int64_t y = 0; y < height; ++y) {
        double fy = (static_cast<double>(y) / static_cast<double>(height)) *
                        static_cast<double>(cells) + phase;
        if (fy > static_cast<double>(cells)) fy = static_cast<double>(cells);
        int64_t y0 = static_cast<int64_t>(fy);
        int64_t y1 = std::min(y0 + 1, cells);
        double wy = fy - static_cast<double>(y0);
        for (int64_t x = 0; x < width; ++x) {
          double fx = (static_cast<double>(x) / static_cast<double>(width)) *
                      static_cast<double>(cells);
          int64_t x0 = static_cast<int64_t>(fx);
          int64_t x1 = std::min(x0 + 1, cells);
          double wx = fx - static_cast<double>(x0);
          double v00 = lattice[static_cast<size_t>(y0 * (cells + 1) + x0)];
          double v01 = lattice[static_cast<size_t>(y0 * (cells + 1) + x1)];
          double v10 = lattice[static_cast<size_t>(y1 * (cells + 1) + x0)];
          double v11 = lattice[static_cast<size_t>(y1 * (cells + 1) + x1)];
          double top = v00 + wx * (v01 - v00);
          double bot = v10 + wx * (v11 - v10);
          dst[y * width + x] += weight * (top + wy * (bot - top));
        }
      }
    }
  };
  add_octave(4, 0.5);
  add_octave(8, 0.3);
  add_octave(16, 0.2);

  // A few soft elliptical patches with their own colors.
  int64_t patches = 2 + static_cast<int64_t>(rng.uniform_int(3));
  for (int64_t k = 0; k < patches; ++k) {
    double cy = rng.uniform(0.15, 0.85) * static_cast<double>(height);
    double cx = rng.uniform(0.15, 0.85) * static_cast<double>(width);
    double ry = rng.uniform(0.12, 0.35) * static_cast<double>(height);
    double rx = rng.uniform(0.12, 0.35) * static_cast<double>(width);
    double col[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
    for (int64_t y = 0; y < height; ++y) {
      for (int64_t x = 0; x < width; ++x) {
        double ny = (static_cast<double>(y) - cy) / ry;
        double nx = (static_cast<double>(x) - cx) / rx;
        double d2 = ny * ny + nx * nx;
        if (d2 >= 1.0) continue;
        double alpha = (1.0 - d2) * (1.0 - d2) * 0.85;  // soft edge
        for (int64_t ch = 0; ch < 3; ++ch) {
          double& v = img.data()[ch * height * width + y * width + x];
          v = (1.0 - alpha) * v + alpha * col[ch];
        }
      }
    }
  }

  return core::clamp01(std::move(img));
}

}  // namespace samdistill::data
