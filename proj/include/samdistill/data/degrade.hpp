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
#include "samdistill/core/rng.hpp"

namespace samdistill::data {

// Additive bright streaks along a dominant direction. Each streak is a line
// segment with a Gaussian cross-section and a Gaussian intensity taper along
// its length; direction and strength jitter per streak around the spec
// values. angle_deg is measured from vertical, so 0 means falling straight
// down.
struct RainSpec {
  int64_t streak_count = 60;
  double length = 16.0;
  double width = 1.2;
  double angle_deg = 15.0;
  double angle_jitter_deg = 8.0;
  double intensity = 0.8;
  double intensity_jitter = 0.35;
};

// Separable Gaussian blur with symmetric (reflected) borders. kernel must
// be odd and no larger than the smaller image side.
struct BlurSpec {
  double sigma = 1.5;
  int64_t kernel = 9;
};

// I.i.d. additive Gaussian noise, clamped back into [0, 1]. sigma must be
// strictly positive.
struct NoiseSpec {
  double sigma = 0.1;
};

struct DegradationSpec {
  std::string kind = "rain";  // "rain", "blur", "noise"
  RainSpec rain;
  BlurSpec blur;
  NoiseSpec noise;
};

core::ImageTensor add_rain_streaks(const core::ImageTensor& clean,
                                   const RainSpec& spec, core::Rng& rng);

core::ImageTensor gaussian_blur(const core::ImageTensor& img,
                                const BlurSpec& spec);

core::ImageTensor add_gaussian_noise(const core::ImageTensor& img,
                                     const NoiseSpec& spec, core::Rng& rng);

// Applies the degradation selected by spec.kind.
core::ImageTensor degrade(const core::ImageTensor& clean,
                          const DegradationSpec& spec, core::Rng& rng);

// Procedural clean image: layered value noise for texture plus a few soft
// elliptical patches so images have distinct regions to segment.
core::ImageTensor make_texture(int64_t height, int64_t width, core::Rng& rng);

}  // namespace samdistill::data
