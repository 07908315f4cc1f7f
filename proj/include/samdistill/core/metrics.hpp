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

#include "samdistill/core/image.hpp"

namespace samdistill::core {

// Mean squared error over all channels and pixels.
double mse(const ImageTensor& a, const ImageTensor& b);

// Peak signal-to-noise ratio in dB for images in [0, 1] (peak = 1).
// Returns 100.0 when the MSE drops below 1e-10, so identical inputs give a
// finite, stable score.
double psnr(const ImageTensor& a, const ImageTensor& b);

// Structural similarity with the standard 11x11 Gaussian window
// (sigma = 1.5), K1 = 0.01, K2 = 0.03, dynamic range 1. Statistics are
// computed over valid windows only (no padding) and the per-channel scores
// are averaged. Requires H, W >= 11.
double ssim(const ImageTensor& a, const ImageTensor& b);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;
inline constexpr double kPsnrMseFloor = 1e-10;
inline constexpr double kPsnrCap = 100.0;

}  // namespace samdistill::core
