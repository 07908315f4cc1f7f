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

#include <cmath>
#include <vector>

#include "samdistill/distill/perceptual.hpp"
#include "samdistill/distill/relation.hpp"
#include "samdistill/distill/smooth_l1.hpp"

namespace samdistill::distill {

// The two distillation terms computed between a student output and the
// refined output for one sample.
//
// The refined image is detached before anything here touches it: these
// losses teach the student but must never send gradient into the refiner.
// The extractor is frozen, so gradient flows through it into the student
// image only. The same mask set gates both feature maps.
//
// sgr pairs the two relation matrices entry by entry over the masks that
// are non-degenerate in both; if fewer than two masks survive, sgr is a
// zero constant and sgr_skipped is set for the caller to log.
template <class S>
struct DistillLossResult {
  VarT<S> spd;
  VarT<S> sgr;
  bool sgr_skipped = false;
  int64_t relation_regions = 0;
};

template <class S>
DistillLossResult<S> spd_sgr_losses(const VarT<S>& student_img,
                                    const VarT<S>& refined_img,
                                    const core::MaskSet& masks,
                                    const PerceptualExtractor<S>& extractor,
                                    bool want_spd = true,
                                    bool want_sgr = true) {
  DistillLossResult<S> out;
  VarT<S> teacher = refined_img.detach();

  if (want_spd) {
    out.spd = smooth_l1(student_img, teacher);
  }
  if (!want_sgr) return out;

  VarT<S> f1 = extractor.forward(student_img);
  TensorT<S> f2;
  {
    core::NoGradGuard ng;
    f2 = extractor.forward(teacher).value();
  }
  const int64_t c = f1.value().dim(0);
  const int64_t h8 = f1.value().dim(1), w8 = f1.value().dim(2);
  const int64_t hw = h8 * w8;
  core::MaskSet masks8 = core::resize_mask_set(masks, h8, w8);

  // Survivors must be non-degenerate under both feature maps.
  std::vector<int64_t> kept;
  std::vector<double> norms2;
  for (int64_t i = 0; i < masks8.n(); ++i) {
    const uint8_t* m = masks8.mask_data(i);
    double acc1 = 0.0, acc2 = 0.0;
    for (int64_t ch = 0; ch < c; ++ch) {
      const S* p1 = f1.value().data() + ch * hw;
      const S* p2 = f2.data() + ch * hw;
      for (int64_t p = 0; p < hw; ++p) {
        if (m[p]) {
          acc1 += static_cast<double>(p1[p]) * static_cast<double>(p1[p]);
          acc2 += static_cast<double>(p2[p]) * static_cast<double>(p2[p]);
        }
      }
    }
    if (std::sqrt(acc1) > kDegenerateNorm && std::sqrt(acc2) > kDegenerateNorm) {
      kept.push_back(i);
      norms2.push_back(std::sqrt(acc2));
    }
  }

  const int64_t m = static_cast<int64_t>(kept.size());
  out.relation_regions = m;
  if (m < 2) {
    out.sgr = VarT<S>::constant(TensorT<S>::scalar(S(0)));
    out.sgr_skipped = true;
    return out;
  }

  // Student side stays in the graph: gated copies, norms, cosines.
  std::vector<VarT<S>> gated(static_cast<size_t>(m));
  std::vector<VarT<S>> norm_vars(static_cast<size_t>(m));
  for (int64_t a = 0; a < m; ++a) {
    TensorT<S> mt({1, h8, w8});
    const uint8_t* bits = masks8.mask_data(kept[static_cast<size_t>(a)]);
    for (int64_t p = 0; p < hw; ++p) mt[p] = static_cast<S>(bits[p]);
    gated[static_cast<size_t>(a)] =
        core::mul_gate(f1, VarT<S>::constant(std::move(mt)));
    norm_vars[static_cast<size_t>(a)] = core::sqrt_op(core::vdot(
        gated[static_cast<size_t>(a)], gated[static_cast<size_t>(a)]));
  }

  // Teacher side is constant; compute its cosines as plain numbers.
  auto teacher_cos = [&](int64_t a, int64_t b) -> S {
    const uint8_t* ma = masks8.mask_data(kept[static_cast<size_t>(a)]);
    const uint8_t* mb = masks8.mask_data(kept[static_cast<size_t>(b)]);
    double dot = 0.0;
    for (int64_t ch = 0; ch < c; ++ch) {
      const S* p2 = f2.data() + ch * hw;
      for (int64_t p = 0; p < hw; ++p) {
        if (ma[p] && mb[p]) {
          dot += static_cast<double>(p2[p]) * static_cast<double>(p2[p]);
        }
      }
    }
    return static_cast<S>(dot / (norms2[static_cast<size_t>(a)] *
                                 norms2[static_cast<size_t>(b)]));
  };

  VarT<S> acc;
  for (int64_t a = 0; a < m; ++a) {
    for (int64_t b = a + 1; b < m; ++b) {
      VarT<S> r1 = core::div(
          core::vdot(gated[static_cast<size_t>(a)], gated[static_cast<size_t>(b)]),
          core::mul(norm_vars[static_cast<size_t>(a)],
                    norm_vars[static_cast<size_t>(b)]));
      VarT<S> gap = core::abs_op(core::add_scalar(r1, -teacher_cos(a, b)));
      acc = acc.defined() ? core::add(acc, gap) : gap;
    }
  }
  // Ordered off-diagonal pairs count m^2 - m; each unordered pair above
  // represents two of them.
  S scale = S(2) / static_cast<S>(m * m - m);
  out.sgr = core::mul_scalar(acc, scale);
  return out;
}

}  // namespace samdistill::distill
