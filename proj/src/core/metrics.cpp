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

#include "samdistill/core/metrics.hpp"

#include <cmath>
#include <vector>

namespace samdistill::core {

namespace {

void check_pair(const ImageTensor& a, const ImageTensor& b, const char* where) {
  validate_image(a);
  validate_image(b);
  a.check_same_shape(b, where);
}

// Normalized 1-d Gaussian taps; the 2-d window is their outer product.
std::vector<double> gaussian_taps(int size, double sigma) {
  std::vector<double> g(static_cast<size_t>(size));
  double sum = 0.0;
  int half = size / 2;
  for (int i = 0; i < size; ++i) {
    double d = static_cast<double>(i - half);
    g[static_cast<size_t>(i)] = std::exp(-(d * d) / (2.0 * sigma * sigma));
    sum += g[static_cast<size_t>(i)];
  }
  for (auto& v : g) v /= sum;
  return g;
}

// Valid-region separable filtering: in is H x W row-major, result is
// (H-size+1) x (W-size+1).
void filter_valid(const std::vector<double>& in, int64_t h, int64_t w,
                  const std::vector<double>& taps, std::vector<double>& out,
                  std::vector<double>& scratch) {
  int64_t k = static_cast<int64_t>(taps.size());
  int64_t ow = w - k + 1, oh = h - k + 1;
  scratch.assign(static_cast<size_t>(h * ow), 0.0);
  for (int64_t y = 0; y < h; ++y) {
    const double* row = in.data() + y * w;
    double* orow = scratch.data() + y * ow;
    for (int64_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int64_t t = 0; t < k; ++t) acc += taps[static_cast<size_t>(t)] * row[x + t];
      orow[x] = acc;
    }
  }
  out.assign(static_cast<size_t>(oh * ow), 0.0);
  for (int64_t y = 0; y < oh; ++y) {
    double* orow = out.data() + y * ow;
    for (int64_t t = 0; t < k; ++t) {
      const double* srow = scratch.data() + (y + t) * ow;
      double tap = taps[static_cast<size_t>(t)];
      for (int64_t x = 0; x < ow; ++x) orow[x] += tap * srow[x];
    }
  }
}

}  // namespace

double mse(const ImageTensor& a, const ImageTensor& b) {
  check_pair(a, b, "mse");
  double acc = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.numel());
}

double psnr(const ImageTensor& a, const ImageTensor& b) {
  double m = mse(a, b);
  if (m < kPsnrMseFloor) return kPsnrCap;
  return 10.0 * std::log10(1.0 / m);
}

double ssim(const ImageTensor& a, const ImageTensor& b) {
  check_pair(a, b, "ssim");
  int64_t c = a.dim(0), h = a.dim(1), w = a.dim(2);
  if (h < kSsimWindow || w < kSsimWindow) {
    throw ShapeError("ssim needs spatial dims >= 11, got " +
                     shape_str(a.shape()));
  }
  const double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
  const double c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);
  auto taps = gaussian_taps(kSsimWindow, kSsimSigma);

  int64_t hw = h * w;
  std::vector<double> x(static_cast<size_t>(hw)), y(static_cast<size_t>(hw));
  std::vector<double> xx(static_cast<size_t>(hw)), yy(static_cast<size_t>(hw)),
      xy(static_cast<size_t>(hw));
  std::vector<double> mx, my, mxx, myy, mxy, scratch;

  double total = 0.0;
  for (int64_t ch = 0; ch < c; ++ch) {
    const double* pa = a.data() + ch * hw;
    const double* pb = b.data() + ch * hw;
    for (int64_t i = 0; i < hw; ++i) {
      x[static_cast<size_t>(i)] = pa[i];
      y[static_cast<size_t>(i)] = pb[i];
      xx[static_cast<size_t>(i)] = pa[i] * pa[i];
      yy[static_cast<size_t>(i)] = pb[i] * pb[i];
      xy[static_cast<size_t>(i)] = pa[i] * pb[i];
    }
    filter_valid(x, h, w, taps, mx, scratch);
    filter_valid(y, h, w, taps, my, scratch);
    filter_valid(xx, h, w, taps, mxx, scratch);
    filter_valid(yy, h, w, taps, myy, scratch);
    filter_valid(xy, h, w, taps, mxy, scratch);

    double acc = 0.0;
    for (size_t i = 0; i < mx.size(); ++i) {
      double ux = mx[i], uy = my[i];
      double vx = mxx[i] - ux * ux;
      double vy = myy[i] - uy * uy;
      double vxy = mxy[i] - ux * uy;
      double num = (2.0 * ux * uy + c1) * (2.0 * vxy + c2);
      double den = (ux * ux + uy * uy + c1) * (vx + vy + c2);
      acc += num / den;
    }
    total += acc / static_cast<double>(mx.size());
  }
  return total / static_cast<double>(c);
}

}  // namespace samdistill::core
