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

#include <cstdint>
#include <string>
#include <vector>

namespace samdistill::verify {

// One correctness claim checked end to end. detail carries the measured
// numbers next to the tolerance that judged them.
struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Loss values match independent scalar-loop references on random inputs.
CheckResult check_loss_oracles();

// Distillation-loss gradients w.r.t. the student image match central finite
// differences.
CheckResult check_loss_gradients();

// The two smooth-L1 branches and their derivatives agree at the knee.
CheckResult check_smooth_l1_knee();

// Across training steps, the weighted distillation terms produce no
// gradient for any refiner or perceptual parameter, and frozen components
// stay bit-identical to initialization.
CheckResult check_stop_gradient_isolation();

// Relation matrices are symmetric, bounded, exactly 1 on the diagonal,
// exactly 0 for disjoint-support masks, and the relation-gap loss is
// invariant under mask permutation.
CheckResult check_relation_properties();

// Fusion units: one per trunk block, identity at zero-init tail, saturated
// attention equals the ablated configuration, masks influence the output.
CheckResult check_fusion_structure();

// A cascade run with both distillation weights at zero reproduces the
// standalone restorer trajectory bit for bit.
CheckResult check_baseline_equivalence();

// Scoring a checkpoint in student mode never invokes the segmenter,
// refiner, or perceptual extractor.
CheckResult check_inference_efficiency();

// psnr/ssim closed-form values and loop-oracle agreement; checkpoint
// save/restore resumes training bit for bit.
CheckResult check_metrics_and_resume();

// The directional experiment: distilled and baseline students trained on a
// synthetic rain task over n_seeds seeds; passes when the mean validation
// PSNR delta (distilled minus baseline) is >= 0.
CheckResult check_distillation_gain(int n_seeds, int64_t steps,
                                    int64_t train_pairs, int64_t val_pairs);

// Every check above except the long training experiment, in a fixed order.
std::vector<CheckResult> run_offline_suite();

}  // namespace samdistill::verify
