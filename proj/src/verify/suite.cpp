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

#include "samdistill/verify/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "samdistill/core/gradcheck.hpp"
#include "samdistill/core/instrument.hpp"
#include "samdistill/core/mask_io.hpp"
#include "samdistill/train/trainer.hpp"
#include "samdistill/verify/oracles.hpp"

namespace samdistill::verify {
namespace {

namespace fs = std::filesystem;
using core::MaskSet;
using core::Rng;
using core::Tensor;
using Var = core::VarT<double>;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

Tensor random_tensor(Rng& rng, core::Shape shape, double lo, double hi) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// Two near-full masks that exclude opposite cy x cx corners: both survive
// any downsampling and their supports overlap, so relation statistics stay
// informative.
MaskSet overlap_masks(int64_t h, int64_t w, int64_t cy, int64_t cx) {
  MaskSet m(2, h, w);
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      if (!(y >= h - cy && x >= w - cx)) m.set(0, y, x, 1);
      if (!(y < cy && x < cx)) m.set(1, y, x, 1);
    }
  }
  m.recompute_areas();
  return m;
}

std::vector<data::PairedSample> tiny_pairs(int n, uint64_t seed) {
  std::vector<data::PairedSample> out;
  Rng rng(seed);
  data::NoiseSpec spec;
  spec.sigma = 0.05;
  for (int i = 0; i < n; ++i) {
    Tensor hq = data::make_texture(16, 16, rng);
    out.push_back(
        {"s" + std::to_string(i), data::add_gaussian_noise(hq, spec, rng), hq});
  }
  return out;
}

train::TrainConfig tiny_cascade_cfg(uint64_t seed) {
  train::TrainConfig cfg;
  cfg.seed = seed;
  cfg.precision = "float64";
  cfg.steps = 50;
  cfg.batch_size = 2;
  cfg.log_every = 1;
  cfg.eval_every = 0;
  cfg.student.channels = 6;
  cfg.student.n_blocks = 1;
  cfg.refiner.channels = 6;
  cfg.refiner.n_blocks = 1;
  cfg.refiner.mask_slots = 4;
  cfg.refiner.spf.hidden = 6;
  cfg.perceptual.width1 = 4;
  cfg.perceptual.width2 = 6;
  cfg.perceptual.width3 = 8;
  cfg.perceptual.out_channels = 12;
  cfg.segmenter.luminance_bins = 3;
  cfg.segmenter.n_max = 4;
  return cfg;
}

distill::PerceptualConfig tiny_perceptual_cfg() {
  distill::PerceptualConfig cfg;
  cfg.width1 = 4;
  cfg.width2 = 6;
  cfg.width3 = 8;
  cfg.out_channels = 12;
  return cfg;
}

template <class S>
std::vector<core::TensorT<S>> snapshot(
    const std::vector<core::NamedParamT<S>>& params) {
  std::vector<core::TensorT<S>> out;
  for (const auto& [name, var] : params) out.push_back(var.value());
  return out;
}

template <class S>
bool bits_equal(const std::vector<core::TensorT<S>>& a,
                const std::vector<core::TensorT<S>>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].shape() != b[i].shape()) return false;
    for (int64_t k = 0; k < a[i].numel(); ++k) {
      if (a[i].data()[k] != b[i].data()[k]) return false;
    }
  }
  return true;
}

std::map<std::string, std::string> dir_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[e.path().filename().string()] = ss.str();
  }
  return out;
}

}  // namespace

CheckResult check_loss_oracles() {
  const double tol = 1e-6;
  Rng rng(2024);
  distill::PerceptualExtractor<double> ext(tiny_perceptual_cfg(), 99);

  double worst_sl1 = 0.0, worst_rel = 0.0, worst_sgr = 0.0, worst_wired = 0.0;
  bool kept_agree = true;
  for (int t = 0; t < 100; ++t) {
    Tensor a = random_tensor(rng, {3, 5, 7}, -2.0, 2.0);
    Tensor b = random_tensor(rng, {3, 5, 7}, -2.0, 2.0);
    double lib =
        distill::smooth_l1(Var::constant(a), Var::constant(b)).item();
    worst_sl1 = std::max(worst_sl1, std::fabs(lib - ref_smooth_l1(a, b)));

    Tensor f1 = random_tensor(rng, {4, 8, 8}, -1.0, 1.0);
    Tensor f2 = random_tensor(rng, {4, 8, 8}, -1.0, 1.0);
    MaskSet masks(3, 8, 8);
    for (int64_t i = 0; i < 3; ++i) {
      for (int64_t y = 0; y < 8; ++y) {
        for (int64_t x = 0; x < 8; ++x) {
          masks.set(i, y, x, rng.uniform() < 0.5 ? 1 : 0);
        }
      }
      masks.set(i, i, i, 1);  // never empty
    }
    masks.recompute_areas();

    distill::RelationMatrix lr1 = distill::relation_matrix(f1, masks, false);
    distill::RelationMatrix lr2 = distill::relation_matrix(f2, masks, false);
    RefRelation rr1 = ref_relation_matrix(f1, masks);
    RefRelation rr2 = ref_relation_matrix(f2, masks);
    if (lr1.kept != rr1.kept || lr2.kept != rr2.kept) kept_agree = false;
    const size_t m = rr1.values.size();
    for (size_t i = 0; i < m; ++i) {
      for (size_t j = 0; j < m; ++j) {
        worst_rel = std::max(
            worst_rel, std::fabs(lr1.values.at2(static_cast<int64_t>(i),
                                                static_cast<int64_t>(j)) -
                                 rr1.values[i][j]));
      }
    }
    worst_sgr = std::max(worst_sgr, std::fabs(distill::relation_gap(lr1, lr2) -
                                              ref_sgr(rr1, rr2)));

    // Every tenth trial, drive the full image-level wiring too.
    if (t % 10 == 0) {
      Tensor i1 = random_tensor(rng, {3, 16, 16}, 0.0, 1.0);
      Tensor i2 = random_tensor(rng, {3, 16, 16}, 0.0, 1.0);
      MaskSet om = overlap_masks(16, 16, 5, 5);
      distill::DistillLossResult<double> d = distill::spd_sgr_losses<double>(
          Var::constant(i1), Var::constant(i2), om, ext, true, true);
      worst_wired = std::max(worst_wired,
                             std::fabs(d.spd.item() - ref_smooth_l1(i1, i2)));
      core::NoGradGuard ng;
      Tensor g1 = ext.forward(Var::constant(i1)).value();
      Tensor g2 = ext.forward(Var::constant(i2)).value();
      MaskSet m8 = core::resize_mask_set(om, g1.dim(1), g1.dim(2));
      double want = ref_sgr(ref_relation_matrix(g1, m8),
                            ref_relation_matrix(g2, m8));
      worst_wired = std::max(worst_wired, std::fabs(d.sgr.item() - want));
    }
  }

  CheckResult r;
  r.name = "loss-oracles";
  r.passed = kept_agree && worst_sl1 < tol && worst_rel < tol &&
             worst_sgr < tol && worst_wired < tol;
  r.detail = "100 trials; max |err| smooth_l1=" + fmt(worst_sl1) +
             " relation=" + fmt(worst_rel) + " sgr=" + fmt(worst_sgr) +
             " wired=" + fmt(worst_wired) + (kept_agree ? "" : "; KEPT-SET MISMATCH") +
             "; tol " + fmt(tol);
  return r;
}

CheckResult check_loss_gradients() {
  const double tol = 1e-3;
  Rng rng(515);
  distill::PerceptualExtractor<double> ext(tiny_perceptual_cfg(), 7);

  double worst_spd = 0.0, worst_sgr = 0.0;
  bool grads_present = true;
  for (int t = 0; t < 20; ++t) {
    Tensor x0 = random_tensor(rng, {3, 16, 16}, 0.0, 1.0);
    Tensor y0 = random_tensor(rng, {3, 16, 16}, 0.0, 1.0);
    MaskSet m = overlap_masks(16, 16, 4 + (t % 4), 4 + ((t / 4) % 4));

    for (int which = 0; which < 2; ++which) {
      bool want_spd = which == 0;
      auto loss_of = [&](const Tensor& x) {
        distill::DistillLossResult<double> d = distill::spd_sgr_losses<double>(
            Var::constant(x), Var::constant(y0), m, ext, want_spd, !want_spd);
        return want_spd ? d.spd.item() : d.sgr.item();
      };
      Tensor fd = core::finite_diff_grad(loss_of, x0);
      Var x = Var::leaf(x0, true);
      distill::DistillLossResult<double> d = distill::spd_sgr_losses<double>(
          x, Var::constant(y0), m, ext, want_spd, !want_spd);
      core::GradMapT<double> g =
          core::backward(want_spd ? d.spd : d.sgr);
      const Tensor* gx = g.find(x);
      if (!gx) {
        grads_present = false;
        continue;
      }
      core::GradCheckReport rep = core::compare_grads(fd, *gx);
      (want_spd ? worst_spd : worst_sgr) =
          std::max(want_spd ? worst_spd : worst_sgr, rep.max_rel_err);
    }
  }

  CheckResult r;
  r.name = "loss-gradients";
  r.passed = grads_present && worst_spd < tol && worst_sgr < tol;
  r.detail = "20 instances 3x16x16; max rel err spd=" + fmt(worst_spd) +
             " sgr=" + fmt(worst_sgr) +
             (grads_present ? "" : "; MISSING GRADIENT") + "; tol " + fmt(tol);
  return r;
}

CheckResult check_smooth_l1_knee() {
  const double vtol = 1e-12, dtol = 1e-9;
  double vgap =
      std::fabs(distill::smooth_l1_quad(1.0) - distill::smooth_l1_lin(1.0));
  double dgap = std::fabs(distill::smooth_l1_quad_deriv(1.0) -
                          distill::smooth_l1_lin_deriv(1.0));

  // The differentiable loss must sit on those same branches.
  auto val_at = [](double d) {
    return distill::smooth_l1(Var::constant(Tensor::scalar(d)),
                              Var::constant(Tensor::scalar(0.0)))
        .item();
  };
  auto grad_at = [](double d) {
    Var x = Var::leaf(Tensor::scalar(d), true);
    core::GradMapT<double> g = core::backward(
        distill::smooth_l1(x, Var::constant(Tensor::scalar(0.0))));
    return g.find(x)->operator[](0);
  };
  bool wired = val_at(1.0) == 0.5 && val_at(1.25) == 0.75 &&
               val_at(-1.25) == 0.75 && grad_at(1.0) == 1.0 &&
               grad_at(0.5) == 0.5 && grad_at(1.25) == 1.0 &&
               grad_at(-1.25) == -1.0;

  CheckResult r;
  r.name = "smooth-l1-knee";
  r.passed = vgap < vtol && dgap < dtol && wired;
  r.detail = "branch value gap=" + fmt(vgap) + " (tol " + fmt(vtol) +
             "), derivative gap=" + fmt(dgap) + " (tol " + fmt(dtol) + ")" +
             (wired ? "" : "; AUTOGRAD OFF-BRANCH");
  return r;
}

CheckResult check_stop_gradient_isolation() {
  fs::path dir = fs::temp_directory_path() / "sd_verify_stopgrad";
  fs::remove_all(dir);
  fs::create_directories(dir);

  std::vector<data::PairedSample> pairs = tiny_pairs(4, 303);
  MaskSet om = overlap_masks(16, 16, 5, 5);
  for (const auto& s : pairs) {
    core::write_mask_set((dir / s.id).string(), om, "verify");
  }

  train::TrainConfig cfg = tiny_cascade_cfg(5);
  cfg.segmenter.kind = "precomputed";
  cfg.segmenter.mask_dir = dir.string();
  train::Trainer<double> t(cfg, pairs, {});
  std::vector<Tensor> frozen0 = snapshot(t.perceptual()->params());
  std::map<std::string, std::string> masks0 = dir_bytes(dir);

  t.set_audit(true);
  double sgr_sum = 0.0;
  for (int i = 0; i < 10; ++i) sgr_sum += t.step().l_sgr;

  bool clean = t.audit_clean();
  bool frozen = bits_equal(frozen0, snapshot(t.perceptual()->params()));
  bool masks_same = masks0 == dir_bytes(dir);
  bool live = sgr_sum > 0.0;

  CheckResult r;
  r.name = "stop-gradient-isolation";
  r.passed = clean && frozen && masks_same && live;
  r.detail = std::string("10 audited steps; refiner/perceptual grad entries ") +
             (clean ? "absent" : "PRESENT") + "; perceptual weights " +
             (frozen ? "bit-identical" : "CHANGED") + "; mask files " +
             (masks_same ? "unchanged" : "CHANGED") +
             "; mean l_sgr=" + fmt(sgr_sum / 10.0) +
             (live ? "" : " (VACUOUS: sgr never fired)");
  return r;
}

CheckResult check_relation_properties() {
  const double sym_tol = 1e-6, range_tol = 1e-6, dup_tol = 1e-9,
               perm_tol = 1e-9;
  Rng rng(808);

  double worst_sym = 0.0, worst_range = 0.0, worst_dup = 0.0, worst_perm = 0.0;
  bool diag_one = true, disjoint_zero = true;
  for (int t = 0; t < 200; ++t) {
    Tensor f1 = random_tensor(rng, {4, 6, 6}, -1.0, 1.0);
    Tensor f2 = random_tensor(rng, {4, 6, 6}, -1.0, 1.0);
    MaskSet masks(4, 6, 6);
    for (int64_t i = 0; i < 4; ++i) {
      for (int64_t y = 0; y < 6; ++y) {
        for (int64_t x = 0; x < 6; ++x) {
          masks.set(i, y, x, rng.uniform() < 0.4 ? 1 : 0);
        }
      }
      masks.set(i, i, i, 1);
    }
    masks.recompute_areas();

    distill::RelationMatrix ra = distill::relation_matrix(f1, masks, false);
    const int64_t m = static_cast<int64_t>(ra.kept.size());
    for (int64_t a = 0; a < m; ++a) {
      if (ra.values.at2(a, a) != 1.0) diag_one = false;
      for (int64_t b = 0; b < m; ++b) {
        worst_sym = std::max(
            worst_sym, std::fabs(ra.values.at2(a, b) - ra.values.at2(b, a)));
        worst_range =
            std::max(worst_range, std::fabs(ra.values.at2(a, b)) - 1.0);
      }
    }

    // A mask listed twice relates to itself with cosine 1.
    MaskSet dup(2, 6, 6);
    for (int64_t p = 0; p < 36; ++p) {
      dup.set(0, p / 6, p % 6, masks.at(0, p / 6, p % 6));
      dup.set(1, p / 6, p % 6, masks.at(0, p / 6, p % 6));
    }
    dup.recompute_areas();
    distill::RelationMatrix rd = distill::relation_matrix(f1, dup, false);
    worst_dup = std::max(worst_dup, std::fabs(rd.values.at2(0, 1) - 1.0));

    // Partition masks: disjoint supports must relate with exactly zero.
    MaskSet part(3, 6, 6);
    for (int64_t p = 0; p < 36; ++p) {
      int64_t owner = p < 3 ? p : static_cast<int64_t>(rng.next_u64() % 3);
      part.set(owner, p / 6, p % 6, 1);
    }
    part.recompute_areas();
    distill::RelationMatrix rp = distill::relation_matrix(f1, part, false);
    for (int64_t a = 0; a < 3; ++a) {
      for (int64_t b = 0; b < 3; ++b) {
        if (a != b && rp.values.at2(a, b) != 0.0) disjoint_zero = false;
      }
    }

    // Relation-gap loss is invariant under relabeling the masks.
    distill::RelationMatrix rb = distill::relation_matrix(f2, masks, false);
    double s1 = distill::relation_gap(ra, rb);
    std::vector<int64_t> perm = {0, 1, 2, 3};
    rng.shuffle(perm);
    MaskSet shuffled(4, 6, 6);
    for (int64_t i = 0; i < 4; ++i) {
      for (int64_t p = 0; p < 36; ++p) {
        shuffled.set(i, p / 6, p % 6, masks.at(perm[static_cast<size_t>(i)],
                                               p / 6, p % 6));
      }
    }
    shuffled.recompute_areas();
    double s2 =
        distill::relation_gap(distill::relation_matrix(f1, shuffled, false),
                              distill::relation_matrix(f2, shuffled, false));
    worst_perm = std::max(worst_perm, std::fabs(s1 - s2));
  }

  CheckResult r;
  r.name = "relation-properties";
  r.passed = worst_sym < sym_tol && worst_range < range_tol && diag_one &&
             disjoint_zero && worst_dup < dup_tol && worst_perm < perm_tol;
  r.detail = "200 trials; symmetry=" + fmt(worst_sym) + " range excess=" +
             fmt(worst_range) + " dup-mask gap=" + fmt(worst_dup) +
             " perm gap=" + fmt(worst_perm) + "; diag exact " +
             (diag_one ? "yes" : "NO") + "; disjoint zero " +
             (disjoint_zero ? "yes" : "NO");
  return r;
}

CheckResult check_fusion_structure() {
  const double sat_tol = 1e-6;
  models::RefinerConfig rc;
  rc.channels = 6;
  rc.n_blocks = 3;
  rc.mask_slots = 4;
  rc.spf.hidden = 6;

  Rng rng(31);
  Tensor img = random_tensor(rng, {3, 8, 8}, 0.0, 1.0);
  MaskSet halves(2, 8, 8);
  for (int64_t p = 0; p < 32; ++p) halves.set(0, p / 8, p % 8, 1);
  for (int64_t p = 32; p < 64; ++p) halves.set(1, p / 8, p % 8, 1);
  halves.recompute_areas();
  Var packed = Var::constant(models::pack_masks<double>(halves, 4, 8, 8));

  // One fusion unit per trunk block, each applied exactly once per forward.
  models::Refiner<double> ident(rc, 11);
  bool unit_count = ident.units().size() == 3;
  ident.reset_unit_applications();
  Var y0 = ident.forward(Var::constant(img), packed);
  bool applied_once = true;
  for (const auto& u : ident.units()) {
    if (u.applications() != 1) applied_once = false;
  }

  // Zero-init tail: the refiner starts as the identity.
  double ident_gap = 0.0;
  for (int64_t i = 0; i < y0.numel(); ++i) {
    ident_gap = std::max(ident_gap, std::fabs(y0.value()[i] - img[i]));
  }

  // Saturated gates match the configuration with attention removed.
  models::RefinerConfig live = rc;
  live.zero_init_tail = false;
  models::RefinerConfig ablated = live;
  ablated.spf.attention = false;
  models::Refiner<double> rs(live, 99);
  models::Refiner<double> rn(ablated, 99);
  for (auto& [name, var] : rs.params()) {
    if (name.find(".attn.") == std::string::npos) continue;
    if (name.ends_with(".w")) var.mutable_value().fill(0.0);
    if (name.ends_with(".b")) var.mutable_value().fill(50.0);
  }
  Var ys = rs.forward(Var::constant(img), packed);
  Var yn = rn.forward(Var::constant(img), packed);
  double sat_gap = 0.0;
  for (int64_t i = 0; i < ys.numel(); ++i) {
    sat_gap = std::max(sat_gap, std::fabs(ys.value()[i] - yn.value()[i]));
  }

  // Masks must be able to change the output.
  MaskSet swapped(2, 8, 8);
  for (int64_t p = 0; p < 64; ++p) {
    swapped.set(0, p / 8, p % 8, halves.at(1, p / 8, p % 8));
    swapped.set(1, p / 8, p % 8, halves.at(0, p / 8, p % 8));
  }
  swapped.recompute_areas();
  Var ym = rs.forward(Var::constant(img),
                      Var::constant(models::pack_masks<double>(swapped, 4, 8, 8)));
  double mask_effect = 0.0;
  for (int64_t i = 0; i < ym.numel(); ++i) {
    mask_effect += std::fabs(ym.value()[i] - ys.value()[i]);
  }

  CheckResult r;
  r.name = "fusion-structure";
  r.passed = unit_count && applied_once && ident_gap == 0.0 &&
             sat_gap < sat_tol && mask_effect > 0.0;
  r.detail = std::string("units per block ") + (unit_count ? "3/3" : "WRONG") +
             (applied_once ? ", applied once" : ", MULTIPLE APPLICATIONS") +
             "; identity gap=" + fmt(ident_gap) + "; saturation gap=" +
             fmt(sat_gap) + " (tol " + fmt(sat_tol) + "); mask effect=" +
             fmt(mask_effect);
  return r;
}

CheckResult check_baseline_equivalence() {
  train::TrainConfig solo_cfg = tiny_cascade_cfg(42);
  solo_cfg.student_only = true;
  train::TrainConfig joint_cfg = tiny_cascade_cfg(42);
  joint_cfg.lambda1 = 0.0;
  joint_cfg.lambda2 = 0.0;

  std::vector<data::PairedSample> pairs = tiny_pairs(4, 17);
  train::Trainer<double> solo(solo_cfg, pairs, {});
  train::Trainer<double> joint(joint_cfg, pairs, {});

  bool losses_equal = true;
  for (int i = 0; i < 50; ++i) {
    if (solo.step().l_recon1 != joint.step().l_recon1) losses_equal = false;
  }
  bool params_equal = bits_equal(snapshot(solo.student().params()),
                                 snapshot(joint.student().params()));

  CheckResult r;
  r.name = "baseline-equivalence";
  r.passed = losses_equal && params_equal;
  r.detail = std::string("50 steps float64; per-step losses ") +
             (losses_equal ? "identical" : "DIVERGED") + "; final params " +
             (params_equal ? "bit-identical" : "DIFFER");
  return r;
}

CheckResult check_inference_efficiency() {
  fs::path dir = fs::temp_directory_path() / "sd_verify_eval";
  fs::remove_all(dir);

  data::DataGenConfig gen;
  gen.out_root = dir.string();
  gen.count_train = 2;
  gen.count_val = 2;
  gen.height = 16;
  gen.width = 16;
  gen.seed = 11;
  gen.degradation.kind = "noise";
  data::generate_dataset(gen);
  std::string val_manifest = (dir / "val" / "manifest.json").string();

  train::TrainConfig cfg = tiny_cascade_cfg(3);
  cfg.student_only = true;
  train::Trainer<double> t(cfg, data::load_dataset(
                                    (dir / "train" / "manifest.json").string()),
                           {});
  std::string ckpt = (dir / "student.bin").string();
  t.save_checkpoint(ckpt);

  core::counters().reset();
  train::EvalReport rep = train::evaluate(ckpt, val_manifest, "student");
  const core::Counters& c = core::counters();
  bool silent = c.segmenter_calls == 0 && c.refiner_forwards == 0 &&
                c.perceptual_forwards == 0;
  bool scored = rep.count == 2 && std::isfinite(rep.mean_psnr) &&
                c.baseline_forwards == 2;

  CheckResult r;
  r.name = "inference-efficiency";
  r.passed = silent && scored;
  r.detail = "student eval of 2 samples: segmenter=" +
             std::to_string(c.segmenter_calls) + " refiner=" +
             std::to_string(c.refiner_forwards) + " perceptual=" +
             std::to_string(c.perceptual_forwards) + " restorer=" +
             std::to_string(c.baseline_forwards) + "; mean psnr=" +
             fmt(rep.mean_psnr);
  return r;
}

CheckResult check_metrics_and_resume() {
  const double psnr_tol = 1e-9, ssim_tol = 1e-6;
  Rng rng(606);

  // Closed forms.
  Tensor img = random_tensor(rng, {3, 16, 16}, 0.0, 1.0);
  double id_psnr = core::psnr(img, img);
  double id_ssim = core::ssim(img, img);
  Tensor a({3, 16, 16}, 0.3), b({3, 16, 16}, 0.4);
  double gap_psnr = core::psnr(a, b);
  Tensor checker({1, 16, 16}), inverse({1, 16, 16});
  for (int64_t p = 0; p < 256; ++p) {
    checker[p] = static_cast<double>((p / 16 + p % 16) % 2);
    inverse[p] = 1.0 - checker[p];
  }
  double anti_ssim = core::ssim(checker, inverse);
  bool closed = id_psnr == 100.0 && std::fabs(id_ssim - 1.0) < psnr_tol &&
                std::fabs(gap_psnr - 20.0) < psnr_tol && anti_ssim < 1.0;

  // Loop oracles.
  double worst_psnr = 0.0, worst_ssim = 0.0;
  for (int t = 0; t < 10; ++t) {
    Tensor x = random_tensor(rng, {3, 16, 16}, 0.0, 1.0);
    Tensor y = random_tensor(rng, {3, 16, 16}, 0.0, 1.0);
    worst_psnr =
        std::max(worst_psnr, std::fabs(core::psnr(x, y) - ref_psnr(x, y)));
    worst_ssim =
        std::max(worst_ssim, std::fabs(core::ssim(x, y) - ref_ssim(x, y)));
  }

  // Bitwise resume.
  fs::path dir = fs::temp_directory_path() / "sd_verify_resume";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::string ckpt = (dir / "mid.bin").string();
  train::TrainConfig cfg = tiny_cascade_cfg(9);
  std::vector<data::PairedSample> pairs = tiny_pairs(5, 23);
  train::Trainer<double> x(cfg, pairs, {});
  for (int i = 0; i < 6; ++i) x.step();
  x.save_checkpoint(ckpt);
  train::Trainer<double> y(cfg, pairs, {});
  y.restore(ckpt);
  for (int i = 0; i < 4; ++i) {
    x.step();
    y.step();
  }
  bool resume_ok = bits_equal(snapshot(x.student().params()),
                              snapshot(y.student().params())) &&
                   bits_equal(snapshot(x.refiner()->params()),
                              snapshot(y.refiner()->params()));

  CheckResult r;
  r.name = "metrics-and-resume";
  r.passed = closed && worst_psnr < psnr_tol && worst_ssim < ssim_tol &&
             resume_ok;
  r.detail = std::string("closed forms ") + (closed ? "exact" : "WRONG") +
             " (anti-correlated ssim=" + fmt(anti_ssim) +
             "); oracle gaps psnr=" + fmt(worst_psnr) + " (tol " +
             fmt(psnr_tol) + ") ssim=" + fmt(worst_ssim) + " (tol " +
             fmt(ssim_tol) + "); resume " +
             (resume_ok ? "bit-identical" : "DIVERGED");
  return r;
}

CheckResult check_distillation_gain(int n_seeds, int64_t steps,
                                    int64_t train_pairs, int64_t val_pairs) {
  fs::path dir = fs::temp_directory_path() / "sd_verify_gain";
  fs::remove_all(dir);

  data::DataGenConfig gen;
  gen.out_root = dir.string();
  gen.count_train = train_pairs;
  gen.count_val = val_pairs;
  gen.height = 64;
  gen.width = 64;
  gen.seed = 7500;
  gen.degradation.kind = "rain";
  data::generate_dataset(gen);
  std::vector<data::PairedSample> train_set =
      data::load_dataset((dir / "train" / "manifest.json").string());
  std::vector<data::PairedSample> val_set =
      data::load_dataset((dir / "val" / "manifest.json").string());

  std::string per_seed;
  double delta_sum = 0.0;
  for (int s = 1; s <= n_seeds; ++s) {
    train::TrainConfig cfg;  // deliberately the default configuration
    cfg.seed = static_cast<uint64_t>(s);
    cfg.steps = steps;
    cfg.eval_every = 0;

    train::Trainer<float> distilled(cfg, train_set, val_set);
    distilled.run();
    double d = distilled.eval_student_psnr();

    train::TrainConfig base = cfg;
    base.student_only = true;
    train::Trainer<float> baseline(base, train_set, val_set);
    baseline.run();
    double b = baseline.eval_student_psnr();

    delta_sum += d - b;
    per_seed += " seed" + std::to_string(s) + ": " + fmt(d) + " vs " + fmt(b);
  }
  double mean_delta = delta_sum / static_cast<double>(n_seeds);

  CheckResult r;
  r.name = "distillation-gain";
  r.passed = mean_delta >= 0.0;
  r.detail = "mean val-PSNR delta over " + std::to_string(n_seeds) +
             " seeds = " + fmt(mean_delta) + " dB (required >= 0);" + per_seed;
  return r;
}

std::vector<CheckResult> run_offline_suite() {
  return {check_loss_oracles(),
          check_loss_gradients(),
          check_smooth_l1_knee(),
          check_stop_gradient_isolation(),
          check_relation_properties(),
          check_fusion_structure(),
          check_baseline_equivalence(),
          check_inference_efficiency(),
          check_metrics_and_resume()};
}

}  // namespace samdistill::verify
