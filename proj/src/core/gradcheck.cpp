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

#include "samdistill/core/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace samdistill::core {

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f,
                        const Tensor& x, double eps) {
  Tensor grad(x.shape());
  Tensor probe = x;
  for (int64_t i = 0; i < x.numel(); ++i) {
    double orig = probe[i];
    probe[i] = orig + eps;
    double fp = f(probe);
    probe[i] = orig - eps;
    double fm = f(probe);
    probe[i] = orig;
    grad[i] = (fp - fm) / (2.0 * eps);
  }
  return grad;
}

GradCheckReport compare_grads(const Tensor& fd, const Tensor& analytic,
                              double denom_floor) {
  fd.check_same_shape(analytic, "compare_grads");
  GradCheckReport rep;
  rep.n = fd.numel();
  for (int64_t i = 0; i < fd.numel(); ++i) {
    double abs_err = std::abs(fd[i] - analytic[i]);
    double denom = std::max({std::abs(fd[i]), std::abs(analytic[i]), denom_floor});
    double rel_err = abs_err / denom;
    rep.max_abs_err = std::max(rep.max_abs_err, abs_err);
    if (rel_err > rep.max_rel_err) {
      rep.max_rel_err = rel_err;
      rep.worst_index = i;
      rep.fd_at_worst = fd[i];
      rep.analytic_at_worst = analytic[i];
    }
  }
  return rep;
}

}  // namespace samdistill::core
