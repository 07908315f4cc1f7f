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

#include "samdistill/core/ops.hpp"

namespace samdistill::distill {

using core::GradSinkT;
using core::TensorT;
using core::VarT;

// Per-element penalty with unit transition point:
//   0.5 d^2        for |d| <= 1
//   |d| - 0.5      otherwise
// Both branches and their derivatives agree at |d| = 1, so the function is
// C^1. The branch pieces are exposed on their own for continuity tests.
inline double smooth_l1_quad(double d) { return 0.5 * d * d; }
inline double smooth_l1_lin(double d) { return std::abs(d) - 0.5; }
inline double smooth_l1_quad_deriv(double d) { return d; }
inline double smooth_l1_lin_deriv(double d) {
  return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
}

template <class S>
inline S smooth_l1_point(S d) {
  S a = d < S(0) ? -d : d;
  return a <= S(1) ? S(0.5) * d * d : a - S(0.5);
}

template <class S>
inline S smooth_l1_point_deriv(S d) {
  S a = d < S(0) ? -d : d;
  if (a <= S(1)) return d;
  return d > S(0) ? S(1) : S(-1);
}

// Mean of smooth_l1_point over all entries of (pred - target).
template <class S>
VarT<S> smooth_l1(const VarT<S>& pred, const VarT<S>& target) {
  pred.value().check_same_shape(target.value(), "smooth_l1");
  const int64_t n = pred.numel();
  const S inv = S(1) / static_cast<S>(n);
  S acc(0);
  for (int64_t i = 0; i < n; ++i)
    acc += smooth_l1_point<S>(pred.value()[i] - target.value()[i]);
  return core::make_op<S>(
      TensorT<S>::scalar(acc * inv), {pred, target},
      [pred, target, inv](const TensorT<S>& g, const GradSinkT<S>& sink) {
        S g0 = g[0] * inv;
        auto* gp = sink(0);
        auto* gt = sink(1);
        if (!gp && !gt) return;
        for (int64_t i = 0; i < pred.numel(); ++i) {
          S d = smooth_l1_point_deriv<S>(pred.value()[i] - target.value()[i]);
          if (gp) (*gp)[i] += g0 * d;
          if (gt) (*gt)[i] -= g0 * d;
        }
      });
}

}  // namespace samdistill::distill
