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

#include <cmath>

#include "doctest.h"
#include "samdistill/core/gradcheck.hpp"
#include "samdistill/core/metrics.hpp"
#include "samdistill/core/rng.hpp"

using namespace samdistill;
using namespace samdistill::core;

namespace {

ImageTensor random_image(Rng& rng, int64_t c, int64_t h, int64_t w) {
  ImageTensor img({c, h, w});
  for (int64_t i = 0; i < img.numel(); ++i) img[i] = rng.uniform();
  return img;
}

}  // namespace

TEST_CASE("psnr hits the cap on identical images") {
  Rng rng(1);
  ImageTensor a = random_image(rng, 3, 16, 16);
  CHECK(psnr(a, a) == 100.0);
}

TEST_CASE("psnr of a constant offset matches the closed form") {
  // Constant error d gives MSE d^2, so PSNR = -20 log10(d).
  ImageTensor a({3, 12, 12}, 0.25);
  ImageTensor b({3, 12, 12}, 0.35);
  double expect = -20.0 * std::log10(0.1);
  CHECK(psnr(a, b) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("psnr is shift invariant inside the unit range") {
  Rng rng(2);
  ImageTensor a = random_image(rng, 3, 16, 16);
  ImageTensor b = random_image(rng, 3, 16, 16);
  for (int64_t i = 0; i < a.numel(); ++i) {
    a[i] = 0.25 + a[i] * 0.5;
    b[i] = 0.25 + b[i] * 0.5;
  }
  ImageTensor a2 = a, b2 = b;
  for (int64_t i = 0; i < a.numel(); ++i) {
    a2[i] += 0.125;
    b2[i] += 0.125;
  }
  CHECK(psnr(a2, b2) == doctest::Approx(psnr(a, b)).epsilon(1e-9));
}

TEST_CASE("ssim equals one on identical images and drops under noise") {
  Rng rng(3);
  ImageTensor a = random_image(rng, 3, 24, 24);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));

  ImageTensor noisy = a;
  for (int64_t i = 0; i < noisy.numel(); ++i) {
    noisy[i] += rng.normal(0.0, 0.1);
    noisy[i] = std::min(1.0, std::max(0.0, noisy[i]));
  }
  double s = ssim(a, noisy);
  CHECK(s < 0.999);
  CHECK(s > -1.0);
  CHECK(s <= 1.0);
}

TEST_CASE("ssim rejects images smaller than the window") {
  ImageTensor tiny({1, 8, 8}, 0.5);
  CHECK_THROWS_AS(ssim(tiny, tiny), ShapeError);
}

TEST_CASE("metric shape mismatches throw") {
  ImageTensor a({3, 16, 16}, 0.5);
  ImageTensor b({3, 16, 17}, 0.5);
  CHECK_THROWS_AS(psnr(a, b), ShapeError);
  CHECK_THROWS_AS(ssim(a, b), ShapeError);
}

TEST_CASE("finite_diff_grad recovers an analytic gradient") {
  // f(x) = sum(sin(x)) has gradient cos(x).
  Rng rng(4);
  Tensor x({7});
  for (int64_t i = 0; i < 7; ++i) x[i] = rng.uniform(-2.0, 2.0);
  Tensor fd = finite_diff_grad(
      [](const Tensor& t) {
        double acc = 0.0;
        for (int64_t i = 0; i < t.numel(); ++i) acc += std::sin(t[i]);
        return acc;
      },
      x, 1e-6);
  Tensor an({7});
  for (int64_t i = 0; i < 7; ++i) an[i] = std::cos(x[i]);
  GradCheckReport rep = compare_grads(fd, an);
  CHECK(rep.passed(1e-8));
  CHECK(rep.n == 7);
}

TEST_CASE("compare_grads reports the worst entry") {
  Tensor fd({3}, {1.0, 2.0, 3.0});
  Tensor an({3}, {1.0, 2.5, 3.0});
  GradCheckReport rep = compare_grads(fd, an);
  CHECK(rep.worst_index == 1);
  CHECK(rep.max_abs_err == doctest::Approx(0.5));
  CHECK(rep.max_rel_err == doctest::Approx(0.2));
  CHECK_FALSE(rep.passed(0.1));
  CHECK(rep.passed(0.3));
}
