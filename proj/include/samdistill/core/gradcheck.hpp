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

#include <functional>

#include "samdistill/core/tensor.hpp"

namespace samdistill::core {

struct GradCheckReport {
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;
  int64_t worst_index = -1;
  double fd_at_worst = 0.0;
  double analytic_at_worst = 0.0;
  int64_t n = 0;

  bool passed(double rel_tol) const { return n > 0 && max_rel_err < rel_tol; }
};

// Central finite differences of a scalar function at x, one entry at a time.
// The function must be deterministic and must not keep references into x.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f,
                        const Tensor& x, double eps = 1e-5);

// Entry-wise comparison. Relative error uses
// |fd - an| / max(|fd|, |an|, denom_floor) so near-zero entries do not blow
// up the ratio through finite-difference noise.
GradCheckReport compare_grads(const Tensor& fd, const Tensor& analytic,
                              double denom_floor = 1e-6);

}  // namespace samdistill::core
