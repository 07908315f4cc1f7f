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
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "samdistill/core/gradcheck.hpp"
#include "samdistill/distill/losses.hpp"
#include "samdistill/distill/perceptual.hpp"
#include "samdistill/distill/relation.hpp"
#include "samdistill/distill/smooth_l1.hpp"
#include "samdistill/models/refiner.hpp"

using namespace samdistill;
using namespace samdistill::core;
using namespace samdistill::distill;

namespace {

Tensor random_tensor(Rng& rng, Shape shape, double lo = 0.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

MaskSet checker_masks(int64_t h, int64_t w) {
  MaskSet m(2, h, w);
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) m.set((y + x) % 2, y, x, 1);
  }
  m.recompute_areas();
  return m;
}

// Two near-full masks that differ only in opposite corners. Coarse enough
// to survive the 8x downsample inside the losses, and overlapping, so the
// cosine between the gated feature vectors actually depends on the features.
MaskSet overlap_masks(int64_t h, int64_t w) {
  MaskSet m(2, h, w);
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      if (!(y >= h - h / 3 && x >= w - w / 3)) m.set(0, y, x, 1);
      if (!(y < h / 3 && x < w / 3)) m.set(1, y, x, 1);
    }
  }
  m.recompute_areas();
  return m;
}

}  // namespace

TEST_CASE("smooth l1 matches per-element piecewise values") {
  // One element per branch: deep quadratic, near the knee, linear.
  Tensor pred({4}, std::vector<double>{0.0, 0.9999999, 1.0000001, 3.5});
  Tensor target({4}, 0.0);
  double expect = 0.0;
  for (double d : {0.0, 0.9999999, 1.0000001, 3.5}) {
    expect += std::abs(d) < 1.0 ? 0.5 * d * d : std::abs(d) - 0.5;
  }
  expect /= 4.0;
  Var loss = smooth_l1(Var::constant(pred), Var::constant(target));
  CHECK(loss.item() == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("smooth l1 is continuous with continuous slope at the knee") {
  auto at = [](double d) {
    Var loss = smooth_l1(Var::constant(Tensor({1}, d)),
                         Var::constant(Tensor({1}, 0.0)));
    return loss.item();
  };
  double eps = 1e-8;
  CHECK(std::abs(at(1.0 + eps) - at(1.0 - eps)) < 1e-7);
  // Slope from both sides of the knee is 1 up to O(eps).
  double left = (at(1.0) - at(1.0 - eps)) / eps;
  double right = (at(1.0 + eps) - at(1.0)) / eps;
  CHECK(std::abs(left - 1.0) < 1e-6);
  CHECK(std::abs(right - 1.0) < 1e-6);
}

TEST_CASE("smooth l1 gradient matches finite differences in both branches") {
  Rng rng(61);
  Tensor pred = random_tensor(rng, {3, 4}, -3.0, 3.0);
  Tensor target = random_tensor(rng, {3, 4}, -0.5, 0.5);
  Var p = Var::leaf(pred, true);
  Var t = Var::leaf(target, true);
  GradMap grads = backward(smooth_l1(p, t));

  auto loss_at = [&](const Tensor& pv, const Tensor& tv) {
    NoGradGuard ng;
    return smooth_l1(Var::constant(pv), Var::constant(tv)).item();
  };
  Tensor fdp = finite_diff_grad(
      [&](const Tensor& v) { return loss_at(v, target); }, pred, 1e-6);
  Tensor fdt = finite_diff_grad(
      [&](const Tensor& v) { return loss_at(pred, v); }, target, 1e-6);
  CHECK(compare_grads(fdp, *grads.find(p)).passed(1e-6));
  CHECK(compare_grads(fdt, *grads.find(t)).passed(1e-6));
}

TEST_CASE("perceptual extractor is deterministic, frozen, and shape-stable") {
  PerceptualConfig cfg;
  cfg.width1 = 4;
  cfg.width2 = 6;
  cfg.width3 = 8;
  cfg.out_channels = 12;
  PerceptualExtractor<double> fa(cfg, 17);
  PerceptualExtractor<double> fb(cfg, 17);

  Rng rng(67);
  Tensor img = random_tensor(rng, {3, 16, 16});
  counters().reset();
  Var ya = fa.forward(Var::constant(img));
  CHECK(counters().perceptual_forwards == 1);
  Var yb = fb.forward(Var::constant(img));
  CHECK(ya.value().shape() == Shape{12, 2, 2});
  for (int64_t i = 0; i < ya.numel(); ++i)
    CHECK(ya.value()[i] == yb.value()[i]);

  // Frozen: gradients flow through to the input, never into the weights.
  Var x = Var::leaf(img, true);
  GradMap grads = backward(mean_all(fa.forward(x)));
  CHECK(grads.find(x) != nullptr);
  for (const auto& [name, var] : fa.params()) {
    INFO("param ", name);
    CHECK(grads.find(var) == nullptr);
  }
}

TEST_CASE("perceptual weights round-trip through the blob container") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "sd_perc_test";
  fs::create_directories(dir);
  fs::path path = dir / "weights.bin";

  PerceptualConfig cfg;
  cfg.width1 = 3;
  cfg.width2 = 4;
  cfg.width3 = 5;
  cfg.out_channels = 6;
  PerceptualExtractor<double> fr(cfg, 23);
  write_perceptual_weights(path.string(), fr);

  PerceptualConfig loaded = cfg;
  loaded.kind = "pretrained";
  loaded.weights_path = path.string();
  PerceptualExtractor<double> fp(loaded, 999);  // seed ignored for pretrained

  Rng rng(71);
  Tensor img = random_tensor(rng, {3, 16, 16});
  Var yp = fp.forward(Var::constant(img));
  Var yr = fr.forward(Var::constant(img));
  for (int64_t i = 0; i < yp.numel(); ++i)
    CHECK(yp.value()[i] == yr.value()[i]);

  PerceptualConfig missing = loaded;
  missing.weights_path = (dir / "absent.bin").string();
  CHECK_THROWS_AS(PerceptualExtractor<double>(missing, 1), IoError);
  fs::remove_all(dir);
}

TEST_CASE("relation matrix is symmetric with unit diagonal and [-1,1] range") {
  Rng rng(73);
  Tensor feat = random_tensor(rng, {5, 8, 8}, -1.0, 1.0);
  MaskSet m(3, 8, 8);
  for (int64_t p = 0; p < 20; ++p) m.set(0, p / 8, p % 8, 1);
  for (int64_t p = 20; p < 45; ++p) m.set(1, p / 8, p % 8, 1);
  for (int64_t p = 45; p < 64; ++p) m.set(2, p / 8, p % 8, 1);
  m.recompute_areas();

  RelationMatrix r = relation_matrix(feat, m);
  REQUIRE(r.kept.size() == 3);
  for (int64_t i = 0; i < 3; ++i) {
    CHECK(r.values[i * 3 + i] == 1.0);
    for (int64_t j = 0; j < 3; ++j) {
      CHECK(r.values[i * 3 + j] == r.values[j * 3 + i]);
      CHECK(std::abs(r.values[i * 3 + j]) <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("relation matrix drops empty regions and flags degenerate sets") {
  Rng rng(79);
  Tensor feat = random_tensor(rng, {4, 6, 6}, -1.0, 1.0);
  MaskSet m(3, 6, 6);
  for (int64_t p = 0; p < 18; ++p) m.set(0, p / 6, p % 6, 1);
  // Mask 1 left empty; mask 2 covers the rest.
  for (int64_t p = 18; p < 36; ++p) m.set(2, p / 6, p % 6, 1);
  m.recompute_areas();

  RelationMatrix r = relation_matrix(feat, m);
  CHECK(r.kept == std::vector<int64_t>{0, 2});

  MaskSet lone(1, 6, 6);
  for (int64_t p = 0; p < 36; ++p) lone.set(0, p / 6, p % 6, 1);
  lone.recompute_areas();
  CHECK_THROWS_AS(relation_matrix(feat, lone), DegenerateRelationError);
}

TEST_CASE("disjoint-support masks always relate with cosine zero") {
  Rng rng(83);
  Tensor feat = random_tensor(rng, {4, 8, 8}, -1.0, 1.0);
  MaskSet m = checker_masks(8, 8);
  RelationMatrix r = relation_matrix(feat, m);
  CHECK(r.values[1] == 0.0);
  CHECK(r.values[2] == 0.0);
}

TEST_CASE("relation gap is zero for identical features, positive otherwise") {
  Rng rng(83);
  Tensor fa = random_tensor(rng, {4, 8, 8}, -1.0, 1.0);
  Tensor fb = random_tensor(rng, {4, 8, 8}, -1.0, 1.0);
  // Overlapping halves: shared support makes the cosines feature-dependent.
  MaskSet m(2, 8, 8);
  for (int64_t y = 0; y < 8; ++y) {
    for (int64_t x = 0; x < 8; ++x) {
      if (x < 5) m.set(0, y, x, 1);
      if (x >= 3) m.set(1, y, x, 1);
    }
  }
  m.recompute_areas();
  RelationMatrix ra = relation_matrix(fa, m);
  RelationMatrix rb = relation_matrix(fb, m);
  CHECK(relation_gap(ra, ra) == 0.0);
  CHECK(relation_gap(ra, rb) > 0.0);
}

TEST_CASE("distillation losses detach the refined image and skip thin masks") {
  PerceptualConfig pcfg;
  pcfg.width1 = 4;
  pcfg.width2 = 4;
  pcfg.width3 = 4;
  pcfg.out_channels = 8;
  PerceptualExtractor<double> extractor(pcfg, 29);

  models::RefinerConfig rcfg;
  rcfg.channels = 4;
  rcfg.n_blocks = 1;
  rcfg.mask_slots = 2;
  rcfg.zero_init_tail = false;
  models::Refiner<double> refiner(rcfg, 31);

  Rng rng(89);
  Tensor student_img = random_tensor(rng, {3, 16, 16});
  Var student = Var::leaf(student_img, true);
  MaskSet m = overlap_masks(16, 16);
  Var refined = refiner.forward(
      student, Var::constant(models::pack_masks<double>(m, 2, 16, 16)));

  DistillLossResult<double> res =
      spd_sgr_losses<double>(student, refined, m, extractor);
  CHECK(!res.sgr_skipped);
  CHECK(res.relation_regions == 2);
  CHECK(res.spd.item() >= 0.0);

  GradMap grads = backward(add(res.spd, res.sgr));
  CHECK(grads.find(student) != nullptr);
  // The refined image is a detached target: nothing reaches refiner params.
  for (const auto& [name, var] : refiner.params()) {
    INFO("param ", name);
    CHECK(grads.find(var) == nullptr);
  }
  for (const auto& [name, var] : extractor.params()) {
    INFO("param ", name);
    CHECK(grads.find(var) == nullptr);
  }

  // A single usable region cannot form a relation: loss skips to zero.
  MaskSet lone(1, 16, 16);
  for (int64_t p = 0; p < 256; ++p) lone.set(0, p / 16, p % 16, 1);
  lone.recompute_areas();
  DistillLossResult<double> skipped =
      spd_sgr_losses<double>(student, refined, lone, extractor);
  CHECK(skipped.sgr_skipped);
  CHECK(skipped.sgr.item() == 0.0);
}

TEST_CASE("sgr loss gradient on the student image matches finite differences") {
  PerceptualConfig pcfg;
  pcfg.width1 = 3;
  pcfg.width2 = 3;
  pcfg.width3 = 3;
  pcfg.out_channels = 4;
  PerceptualExtractor<double> extractor(pcfg, 41);

  Rng rng(97);
  Tensor student_img = random_tensor(rng, {3, 16, 16});
  Tensor refined_img = random_tensor(rng, {3, 16, 16});
  MaskSet m = overlap_masks(16, 16);
  Var refined = Var::constant(refined_img);

  Var student = Var::leaf(student_img, true);
  DistillLossResult<double> res =
      spd_sgr_losses<double>(student, refined, m, extractor);
  GradMap grads = backward(res.sgr);
  REQUIRE(grads.find(student) != nullptr);

  auto loss_at = [&](const Tensor& img) {
    NoGradGuard ng;
    DistillLossResult<double> r = spd_sgr_losses<double>(
        Var::constant(img), refined, m, extractor, false, true);
    return r.sgr.item();
  };
  Tensor fd = finite_diff_grad(loss_at, student_img, 1e-6);
  CHECK(compare_grads(fd, *grads.find(student)).passed(1e-4));
}
