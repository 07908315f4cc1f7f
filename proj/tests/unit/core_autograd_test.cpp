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
#include "samdistill/core/ops.hpp"
#include "samdistill/core/rng.hpp"

using namespace samdistill;
using namespace samdistill::core;

namespace {

Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// Finite-difference check of a scalar-valued graph builder against the
// gradient from backward().
void check_against_fd(const std::function<Var(const Var&)>& build,
                      const Tensor& x0, double tol = 1e-6) {
  Var x = Var::leaf(x0, true);
  Var y = build(x);
  GradMap grads = backward(y);
  const Tensor* gx = grads.find(x);
  REQUIRE(gx != nullptr);

  Tensor fd = finite_diff_grad(
      [&](const Tensor& probe) {
        NoGradGuard ng;
        Var px = Var::leaf(probe, false);
        return build(px).item();
      },
      x0, 1e-6);
  GradCheckReport rep = compare_grads(fd, *gx, 1e-6);
  CHECK_MESSAGE(rep.passed(tol), "max_rel_err=", rep.max_rel_err,
                " at index ", rep.worst_index);
}

}  // namespace

TEST_CASE("backward of composite elementwise graph matches finite differences") {
  Rng rng(11);
  Tensor x0 = random_tensor(rng, {3, 5, 4});
  check_against_fd(
      [](const Var& x) {
        Var a = mul_scalar(x, 2.0);
        Var b = softplus(a);
        Var c = mul(b, sigmoid(x));
        return mean_all(c);
      },
      x0, 1e-5);
}

TEST_CASE("abs and relu subgradients") {
  Tensor x0({3}, {-2.0, 0.0, 3.0});
  Var x = Var::leaf(x0, true);
  GradMap g1 = backward(sum_all(abs_op(x)));
  const Tensor* g = g1.find(x);
  REQUIRE(g);
  CHECK((*g)[0] == -1.0);
  CHECK((*g)[1] == 0.0);  // subgradient at the kink
  CHECK((*g)[2] == 1.0);

  GradMap g2 = backward(sum_all(relu(x)));
  const Tensor* gr = g2.find(x);
  REQUIRE(gr);
  CHECK((*gr)[0] == 0.0);
  CHECK((*gr)[1] == 0.0);
  CHECK((*gr)[2] == 1.0);
}

TEST_CASE("gradient accumulates over shared subexpressions") {
  Tensor x0({1}, {3.0});
  Var x = Var::leaf(x0, true);
  Var y = mul(x, x);  // x^2, dy/dx = 2x
  GradMap g = backward(y);
  CHECK(g.find(x)->item() == 6.0);
}

TEST_CASE("no gradient entries exist for constants and detached values") {
  Tensor x0({4}, {1.0, 2.0, 3.0, 4.0});
  Var x = Var::leaf(x0, true);
  Var c = Var::constant(x0);
  Var y = mean_all(mul(x.detach(), c));
  CHECK_FALSE(y.requires_grad());
  GradMap g = backward(mean_all(add(mul(x, c), x.detach())));
  CHECK(g.find(x) != nullptr);
  CHECK(g.find(c) == nullptr);

  // Entire graph under NoGradGuard yields constants.
  {
    NoGradGuard ng;
    Var z = mul(x, x);
    CHECK_FALSE(z.requires_grad());
  }
}

TEST_CASE("backward requires a scalar root") {
  Var x = Var::leaf(Tensor({2}, {1.0, 2.0}), true);
  CHECK_THROWS_AS(backward(mul(x, x)), ShapeError);
}

TEST_CASE("structural ops: concat, gate, resizes differentiate correctly") {
  Rng rng(13);
  Tensor x0 = random_tensor(rng, {2, 6, 5});

  SUBCASE("concat_channels") {
    check_against_fd(
        [](const Var& x) {
          Var y = concat_channels<double>({x, mul_scalar(x, 3.0)});
          return mean_all(mul(y, y));
        },
        x0, 1e-5);
  }

  SUBCASE("mul_gate") {
    // Direct value/grad check with an independent gate input.
    Var x = Var::leaf(x0, true);
    Tensor g0 = random_tensor(rng, {1, 6, 5}, 0.1, 0.9);
    Var gate = Var::leaf(g0, true);
    Var y = mean_all(mul_gate(x, gate));
    GradMap grads = backward(y);
    const Tensor* gx = grads.find(x);
    const Tensor* gg = grads.find(gate);
    REQUIRE(gx);
    REQUIRE(gg);
    double inv = 1.0 / static_cast<double>(x0.numel());
    for (int64_t c = 0; c < 2; ++c)
      for (int64_t p = 0; p < 30; ++p)
        CHECK((*gx)[c * 30 + p] == doctest::Approx(g0[p] * inv).epsilon(1e-12));
    for (int64_t p = 0; p < 30; ++p)
      CHECK((*gg)[p] ==
            doctest::Approx((x0[p] + x0[30 + p]) * inv).epsilon(1e-12));
  }

  SUBCASE("resize_bilinear") {
    check_against_fd(
        [](const Var& x) {
          Var y = resize_bilinear(x, 4, 7);
          return mean_all(mul(y, y));
        },
        x0, 1e-5);
  }

  SUBCASE("resize_nearest") {
    check_against_fd(
        [](const Var& x) {
          Var y = resize_nearest(x, 3, 2);
          return mean_all(mul(y, y));
        },
        x0, 1e-5);
  }

  SUBCASE("vdot and sqrt") {
    check_against_fd(
        [](const Var& x) {
          Var n = sqrt_op(add_scalar(vdot(x, x), 1e-3));
          return div(vdot(x, mul_scalar(x, 0.5)), n);
        },
        x0, 1e-5);
  }
}

TEST_CASE("resize_bilinear preserves constants and is identity at same size") {
  Tensor c({3, 4, 4}, 0.7);
  Var x = Var::constant(c);
  Var up = resize_bilinear(x, 9, 5);
  for (int64_t i = 0; i < up.numel(); ++i)
    CHECK(up.value()[i] == doctest::Approx(0.7).epsilon(1e-14));

  Rng rng(5);
  Tensor r = random_tensor(rng, {1, 3, 3});
  Var same = resize_bilinear(Var::constant(r), 3, 3);
  for (int64_t i = 0; i < r.numel(); ++i) CHECK(same.value()[i] == r[i]);
}

TEST_CASE("frozen leaf blocks gradients into it but not through it") {
  // y = mean(w * x): w frozen, x trainable. Gradient flows through the
  // product into x, none is recorded for w.
  Rng rng(17);
  Tensor w0 = random_tensor(rng, {4});
  Tensor x0 = random_tensor(rng, {4});
  Var w = Var::leaf(w0, false);
  Var x = Var::leaf(x0, true);
  GradMap g = backward(mean_all(mul(w, x)));
  CHECK(g.find(w) == nullptr);
  const Tensor* gx = g.find(x);
  REQUIRE(gx);
  for (int64_t i = 0; i < 4; ++i)
    CHECK((*gx)[i] == doctest::Approx(w0[i] / 4.0).epsilon(1e-14));
}
