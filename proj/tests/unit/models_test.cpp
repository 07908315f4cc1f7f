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
#include "samdistill/models/baseline.hpp"
#include "samdistill/models/refiner.hpp"

using namespace samdistill;
using namespace samdistill::core;
using namespace samdistill::models;

namespace {

Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// Direct convolution for reference.
Tensor conv_reference(const Tensor& x, const Tensor& w, const Tensor& b,
                      int64_t stride, int64_t pad) {
  int64_t cin = x.dim(0), h = x.dim(1), iw = x.dim(2);
  int64_t cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  int64_t oh = (h + 2 * pad - kh) / stride + 1;
  int64_t ow = (iw + 2 * pad - kw) / stride + 1;
  Tensor y({cout, oh, ow});
  for (int64_t co = 0; co < cout; ++co) {
    for (int64_t oy = 0; oy < oh; ++oy) {
      for (int64_t ox = 0; ox < ow; ++ox) {
        double acc = b[co];
        for (int64_t ci = 0; ci < cin; ++ci) {
          for (int64_t ky = 0; ky < kh; ++ky) {
            for (int64_t kx = 0; kx < kw; ++kx) {
              int64_t sy = oy * stride + ky - pad;
              int64_t sx = ox * stride + kx - pad;
              if (sy < 0 || sy >= h || sx < 0 || sx >= iw) continue;
              acc += x.at3(ci, sy, sx) *
                     w[((co * cin + ci) * kh + ky) * kw + kx];
            }
          }
        }
        y.at3(co, oy, ox) = acc;
      }
    }
  }
  return y;
}

}  // namespace

TEST_CASE("conv2d forward matches a direct loop for several geometries") {
  Rng rng(31);
  struct Geo {
    int64_t cin, h, w, cout, k, stride, pad;
  };
  for (Geo g : {Geo{3, 9, 7, 4, 3, 1, 1}, Geo{2, 8, 8, 5, 3, 2, 1},
                Geo{4, 6, 6, 2, 1, 1, 0}, Geo{1, 5, 9, 3, 5, 1, 2},
                Geo{3, 10, 10, 2, 3, 2, 0}, Geo{2, 1, 6, 3, 3, 1, 1},
                Geo{2, 6, 1, 3, 3, 1, 1}, Geo{2, 1, 1, 3, 3, 1, 1},
                Geo{2, 2, 3, 3, 3, 1, 1}}) {
    Tensor x0 = random_tensor(rng, {g.cin, g.h, g.w});
    Tensor w0 = random_tensor(rng, {g.cout, g.cin, g.k, g.k});
    Tensor b0 = random_tensor(rng, {g.cout});
    Var y = conv2d(Var::constant(x0), Var::constant(w0), Var::constant(b0),
                   g.stride, g.pad);
    Tensor ref = conv_reference(x0, w0, b0, g.stride, g.pad);
    REQUIRE(y.value().same_shape(ref));
    for (int64_t i = 0; i < ref.numel(); ++i)
      CHECK(y.value()[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("conv2d gradients match finite differences") {
  Rng rng(37);
  for (int64_t stride : {int64_t(1), int64_t(2)}) {
    Tensor x0 = random_tensor(rng, {2, 6, 5});
    Tensor w0 = random_tensor(rng, {3, 2, 3, 3}, -0.5, 0.5);
    Tensor b0 = random_tensor(rng, {3}, -0.1, 0.1);

    Var x = Var::leaf(x0, true);
    Var w = Var::leaf(w0, true);
    Var b = Var::leaf(b0, true);
    Var loss = mean_all(mul(conv2d(x, w, b, stride, 1),
                            conv2d(x, w, b, stride, 1)));
    GradMap grads = backward(loss);

    auto loss_at = [&](const Tensor& xv, const Tensor& wv, const Tensor& bv) {
      NoGradGuard ng;
      Var c = conv2d(Var::constant(xv), Var::constant(wv), Var::constant(bv),
                     stride, 1);
      return mean_all(mul(c, c)).item();
    };

    Tensor fdx = finite_diff_grad(
        [&](const Tensor& t) { return loss_at(t, w0, b0); }, x0, 1e-6);
    Tensor fdw = finite_diff_grad(
        [&](const Tensor& t) { return loss_at(x0, t, b0); }, w0, 1e-6);
    Tensor fdb = finite_diff_grad(
        [&](const Tensor& t) { return loss_at(x0, w0, t); }, b0, 1e-6);

    CHECK(compare_grads(fdx, *grads.find(x)).passed(1e-5));
    CHECK(compare_grads(fdw, *grads.find(w)).passed(1e-5));
    CHECK(compare_grads(fdb, *grads.find(b)).passed(1e-5));
  }
}

TEST_CASE("conv2d rejects bad shapes") {
  Var x = Var::constant(Tensor({2, 5, 5}));
  Var w = Var::constant(Tensor({3, 4, 3, 3}));  // cin mismatch
  Var b = Var::constant(Tensor({3}));
  CHECK_THROWS_AS(conv2d(x, w, b, 1, 1), ShapeError);

  Var w2 = Var::constant(Tensor({3, 2, 9, 9}));  // kernel larger than input+pad
  CHECK_THROWS_AS(conv2d(x, w2, Var::constant(Tensor({3})), 1, 1), ShapeError);
}

TEST_CASE("baseline model is the identity at init and counts forwards") {
  BaselineIRConfig cfg;
  cfg.channels = 8;
  cfg.n_blocks = 2;
  BaselineModel<double> model(cfg, 123);

  Rng rng(41);
  Tensor img = random_tensor(rng, {3, 16, 16}, 0.0, 1.0);
  counters().reset();
  Var y = model.forward(Var::constant(img));
  CHECK(counters().baseline_forwards == 1);
  for (int64_t i = 0; i < img.numel(); ++i) CHECK(y.value()[i] == img[i]);

  // 2 params for head + per block + tail.
  CHECK(model.params().size() == 2 * (1 + 2 + 1));
}

TEST_CASE("baseline models with the same seed agree across precisions") {
  BaselineIRConfig cfg;
  cfg.channels = 4;
  cfg.n_blocks = 1;
  BaselineModel<double> md(cfg, 9);
  BaselineModel<float> mf(cfg, 9);
  auto pd = md.params();
  auto pf = mf.params();
  REQUIRE(pd.size() == pf.size());
  for (size_t i = 0; i < pd.size(); ++i) {
    CHECK(pd[i].first == pf[i].first);
    for (int64_t k = 0; k < pd[i].second.numel(); ++k) {
      CHECK(static_cast<float>(pd[i].second.value()[k]) ==
            pf[i].second.value()[k]);
    }
  }
}

TEST_CASE("pack_masks fills slots in order and zero-pads") {
  MaskSet m(2, 4, 4);
  for (int64_t x = 0; x < 4; ++x) {
    m.set(0, 0, x, 1);
    m.set(1, 3, x, 1);
  }
  m.recompute_areas();
  TensorT<double> packed = pack_masks<double>(m, 4, 4, 4);
  CHECK(packed.shape() == Shape{4, 4, 4});
  CHECK(packed.at3(0, 0, 0) == 1.0);
  CHECK(packed.at3(0, 1, 0) == 0.0);
  CHECK(packed.at3(1, 3, 2) == 1.0);
  for (int64_t p = 0; p < 16; ++p) {
    CHECK(packed[2 * 16 + p] == 0.0);
    CHECK(packed[3 * 16 + p] == 0.0);
  }
  // Resizes when mask resolution differs from the target.
  TensorT<double> half = pack_masks<double>(m, 2, 2, 2);
  CHECK(half.shape() == Shape{2, 2, 2});
}

TEST_CASE("refiner applies one fusion unit per block and starts as identity") {
  RefinerConfig cfg;
  cfg.channels = 6;
  cfg.n_blocks = 3;
  cfg.mask_slots = 4;
  cfg.spf.hidden = 5;
  Refiner<double> refiner(cfg, 77);
  CHECK(refiner.units().size() == 3);

  Rng rng(43);
  Tensor img = random_tensor(rng, {3, 12, 12}, 0.0, 1.0);
  MaskSet m(2, 12, 12);
  for (int64_t p = 0; p < 72; ++p) {
    m.set(0, p / 12, p % 12, 1);
    m.set(1, (p + 72) / 12, (p + 72) % 12, 1);
  }
  m.recompute_areas();
  Var mp = Var::constant(pack_masks<double>(m, cfg.mask_slots, 12, 12));

  counters().reset();
  refiner.reset_unit_applications();
  Var out = refiner.forward(Var::constant(img), mp);
  CHECK(counters().refiner_forwards == 1);
  for (const auto& u : refiner.units()) CHECK(u.applications() == 1);
  // Zero-init tail: output is exactly the input image.
  for (int64_t i = 0; i < img.numel(); ++i) CHECK(out.value()[i] == img[i]);
}

TEST_CASE("refiner output depends on masks through the attention gates") {
  RefinerConfig cfg;
  cfg.channels = 6;
  cfg.n_blocks = 2;
  cfg.mask_slots = 4;
  cfg.zero_init_tail = false;  // give the tail signal so masks can matter
  Refiner<double> refiner(cfg, 55);

  Rng rng(47);
  Tensor img = random_tensor(rng, {3, 8, 8}, 0.0, 1.0);
  MaskSet ma(1, 8, 8);
  for (int64_t p = 0; p < 32; ++p) ma.set(0, p / 8, p % 8, 1);
  ma.recompute_areas();
  MaskSet mb(1, 8, 8);
  for (int64_t p = 32; p < 64; ++p) mb.set(0, p / 8, p % 8, 1);
  mb.recompute_areas();

  Var ya = refiner.forward(
      Var::constant(img),
      Var::constant(pack_masks<double>(ma, cfg.mask_slots, 8, 8)));
  Var yb = refiner.forward(
      Var::constant(img),
      Var::constant(pack_masks<double>(mb, cfg.mask_slots, 8, 8)));
  double diff = 0.0;
  for (int64_t i = 0; i < ya.numel(); ++i)
    diff += std::abs(ya.value()[i] - yb.value()[i]);
  CHECK(diff > 0.0);
}

TEST_CASE("saturated attention matches the ablated configuration") {
  RefinerConfig with;
  with.channels = 6;
  with.n_blocks = 2;
  with.mask_slots = 4;
  with.zero_init_tail = false;
  RefinerConfig without = with;
  without.spf.attention = false;

  // Same seed: ablation must not shift any other layer's initialization.
  Refiner<double> ra(with, 99);
  Refiner<double> rb(without, 99);

  // Saturate every gate: zero weights, large positive bias.
  for (auto& [name, var] : ra.params()) {
    if (name.find(".attn.") == std::string::npos) continue;
    if (name.ends_with(".w")) var.mutable_value().fill(0.0);
    if (name.ends_with(".b")) var.mutable_value().fill(50.0);
  }

  Rng rng(53);
  Tensor img = random_tensor(rng, {3, 8, 8}, 0.0, 1.0);
  MaskSet m(2, 8, 8);
  for (int64_t p = 0; p < 32; ++p) m.set(0, p / 8, p % 8, 1);
  for (int64_t p = 32; p < 64; ++p) m.set(1, p / 8, p % 8, 1);
  m.recompute_areas();
  Var mp = Var::constant(pack_masks<double>(m, 4, 8, 8));

  Var ya = ra.forward(Var::constant(img), mp);
  Var yb = rb.forward(Var::constant(img), mp);
  for (int64_t i = 0; i < ya.numel(); ++i)
    CHECK(std::abs(ya.value()[i] - yb.value()[i]) < 1e-6);
}

TEST_CASE("whole refiner differentiates: gradients reach every parameter") {
  RefinerConfig cfg;
  cfg.channels = 4;
  cfg.n_blocks = 2;
  cfg.mask_slots = 2;
  cfg.spf.hidden = 3;
  Refiner<double> refiner(cfg, 7);

  Rng rng(59);
  Tensor img = random_tensor(rng, {3, 8, 8}, 0.0, 1.0);
  MaskSet m(2, 8, 8);
  for (int64_t p = 0; p < 32; ++p) m.set(0, p / 8, p % 8, 1);
  for (int64_t p = 32; p < 64; ++p) m.set(1, p / 8, p % 8, 1);
  m.recompute_areas();

  Var x = Var::leaf(img, true);
  Var y = refiner.forward(x, Var::constant(pack_masks<double>(m, 2, 8, 8)));
  Var target = Var::constant(Tensor({3, 8, 8}, 0.5));
  GradMap grads = backward(l1_loss(y, target));

  for (const auto& [name, var] : refiner.params()) {
    INFO("param ", name);
    CHECK(grads.find(var) != nullptr);
  }
  CHECK(grads.find(x) != nullptr);
}
