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

#include <Eigen/Dense>

#include <cstring>
#include <memory>
#include <vector>

#include "samdistill/core/ops.hpp"
#include "samdistill/core/rng.hpp"

// 2-d convolution with two execution paths. The 3x3 stride-1 pad-1 shape,
// which dominates training time, runs as nine per-tap GEMMs on the flat
// [c, h*w] image: shifting the whole plane by dy*w+dx handles each tap in
// one product, and the few output pixels whose shifted source crossed a row
// edge are corrected afterwards. Nothing is materialized, so retaining the
// graph for a full batch stays cheap. Every other geometry goes through
// im2col + GEMM with the column matrix laid out row-major [K, N]
// (K = cin*kh*kw patch size, N = oh*ow output pixels) so that each
// (channel, tap) row is a contiguous span of the input row and stride-1
// copies reduce to memcpy. Eigen does the matrix products.

namespace samdistill::models {

using core::GradSinkT;
using core::Shape;
using core::TensorT;
using core::VarT;

template <class S>
VarT<S> apply_activation(const std::string& kind, const VarT<S>& x) {
  if (kind == "relu") return core::relu(x);
  if (kind == "softplus") return core::softplus(x);
  throw ConfigError("unknown activation '" + kind + "'");
}

namespace detail {

template <class S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using MatMap = Eigen::Map<RowMat<S>>;
template <class S>
using CMatMap = Eigen::Map<const RowMat<S>>;

inline int64_t floor_div(int64_t a, int64_t b) {
  int64_t q = a / b, r = a % b;
  return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}

inline int64_t ceil_div(int64_t a, int64_t b) { return floor_div(a + b - 1, b); }

inline int64_t conv_out_dim(int64_t in, int64_t k, int64_t stride, int64_t pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// Valid output-x range [x0, x1) for a tap offset kx: inside it the source
// column ox*stride + kx - pad lies in [0, w).
inline void tap_range(int64_t kx, int64_t w, int64_t ow, int64_t stride,
                      int64_t pad, int64_t* x0, int64_t* x1) {
  *x0 = std::max<int64_t>(0, ceil_div(pad - kx, stride));
  *x1 = std::min<int64_t>(ow, floor_div(w - 1 - kx + pad, stride) + 1);
  if (*x1 < *x0) *x1 = *x0;
}

template <class S>
void im2col(const S* src, int64_t cin, int64_t h, int64_t w, int64_t kh,
            int64_t kw, int64_t stride, int64_t pad, int64_t oh, int64_t ow,
            S* out) {
  const int64_t plane = h * w;
  const int64_t n = oh * ow;
  for (int64_t c = 0; c < cin; ++c) {
    for (int64_t ky = 0; ky < kh; ++ky) {
      for (int64_t kx = 0; kx < kw; ++kx) {
        S* dst = out + ((c * kh + ky) * kw + kx) * n;
        int64_t x0, x1;
        tap_range(kx, w, ow, stride, pad, &x0, &x1);
        for (int64_t oy = 0; oy < oh; ++oy) {
          S* drow = dst + oy * ow;
          int64_t sy = oy * stride + ky - pad;
          if (sy < 0 || sy >= h) {
            std::memset(drow, 0, sizeof(S) * static_cast<size_t>(ow));
            continue;
          }
          const S* srow = src + c * plane + sy * w;
          if (x0 > 0) std::memset(drow, 0, sizeof(S) * static_cast<size_t>(x0));
          if (x1 < ow)
            std::memset(drow + x1, 0, sizeof(S) * static_cast<size_t>(ow - x1));
          if (stride == 1) {
            std::memcpy(drow + x0, srow + x0 + kx - pad,
                        sizeof(S) * static_cast<size_t>(x1 - x0));
          } else {
            for (int64_t ox = x0; ox < x1; ++ox)
              drow[ox] = srow[ox * stride + kx - pad];
          }
        }
      }
    }
  }
}

template <class S>
using ColMap =
    Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>, 0, Eigen::InnerStride<>>;
template <class S>
using CColMap = Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>, 0,
                           Eigen::InnerStride<>>;

// Geometry of one 3x3 tap on the flattened 'same' image. Output indices in
// [lo, hi) may read source index i + delta in one shifted GEMM; within that
// range, outputs at column bad_x (rows r0..r1) picked up a value from the
// neighboring row and must have the tap's contribution removed again.
struct TapSpan {
  int64_t delta;
  int64_t lo, hi;
  int64_t r0, r1;
  int64_t bad_x;  // -1 when the tap has no horizontal shift
};

inline TapSpan tap_span(int64_t ky, int64_t kx, int64_t h, int64_t w) {
  const int64_t dy = ky - 1, dx = kx - 1;
  TapSpan t;
  t.delta = dy * w + dx;
  t.r0 = std::max<int64_t>(0, -dy);
  t.r1 = std::min<int64_t>(h, h - dy);
  t.lo = std::max(t.r0 * w, -t.delta);
  t.hi = std::min(t.r1 * w, h * w - t.delta);
  if (t.hi < t.lo) t.hi = t.lo;
  t.bad_x = dx == 0 ? -1 : (dx > 0 ? w - 1 : 0);
  return t;
}

// Gathers tap (ky, kx) of a [cout, cin, 3, 3] kernel into a dense matrix.
template <class S>
void pack_tap(const S* w, int64_t cout, int64_t cin, int64_t ky, int64_t kx,
              RowMat<S>* tap) {
  tap->resize(cout, cin);
  for (int64_t co = 0; co < cout; ++co)
    for (int64_t ci = 0; ci < cin; ++ci)
      (*tap)(co, ci) = w[((co * cin + ci) * 3 + ky) * 3 + kx];
}

// Transpose of im2col: scatter-add column gradients back onto the input.
template <class S>
void col2im_add(const S* cols, int64_t cin, int64_t h, int64_t w, int64_t kh,
                int64_t kw, int64_t stride, int64_t pad, int64_t oh, int64_t ow,
                S* dst) {
  const int64_t plane = h * w;
  const int64_t n = oh * ow;
  for (int64_t c = 0; c < cin; ++c) {
    for (int64_t ky = 0; ky < kh; ++ky) {
      for (int64_t kx = 0; kx < kw; ++kx) {
        const S* srcrow = cols + ((c * kh + ky) * kw + kx) * n;
        int64_t x0, x1;
        tap_range(kx, w, ow, stride, pad, &x0, &x1);
        for (int64_t oy = 0; oy < oh; ++oy) {
          int64_t sy = oy * stride + ky - pad;
          if (sy < 0 || sy >= h) continue;
          const S* crow = srcrow + oy * ow;
          S* drow = dst + c * plane + sy * w;
          if (stride == 1) {
            for (int64_t ox = x0; ox < x1; ++ox) drow[ox + kx - pad] += crow[ox];
          } else {
            for (int64_t ox = x0; ox < x1; ++ox)
              drow[ox * stride + kx - pad] += crow[ox];
          }
        }
      }
    }
  }
}

// 3x3 stride-1 pad-1 path: per-tap shifted GEMMs, edge columns fixed up.
template <class S>
VarT<S> conv3x3_same(const VarT<S>& x, const VarT<S>& w, const VarT<S>& b) {
  const auto& xv = x.value();
  const auto& bv = b.value();
  const int64_t cin = xv.dim(0), h = xv.dim(1), iw = xv.dim(2);
  const int64_t cout = w.value().dim(0);
  const int64_t n = h * iw;

  TensorT<S> y({cout, h, iw});
  for (int64_t c = 0; c < cout; ++c) {
    const S bias = bv[c];
    S* row = y.data() + c * n;
    for (int64_t i = 0; i < n; ++i) row[i] = bias;
  }
  MatMap<S> ym(y.data(), cout, n);
  CMatMap<S> xm(xv.data(), cin, n);
  RowMat<S> tap;
  for (int64_t t = 0; t < 9; ++t) {
    const TapSpan ts = tap_span(t / 3, t % 3, h, iw);
    if (ts.hi == ts.lo) continue;
    pack_tap(w.value().data(), cout, cin, t / 3, t % 3, &tap);
    ym.middleCols(ts.lo, ts.hi - ts.lo).noalias() +=
        tap * xm.middleCols(ts.lo + ts.delta, ts.hi - ts.lo);
    if (ts.bad_x < 0) continue;
    for (int64_t oy = ts.r0; oy < ts.r1; ++oy) {
      const int64_t i = oy * iw + ts.bad_x;
      if (i < ts.lo || i >= ts.hi) continue;
      ColMap<S> ycol(y.data() + i, cout, Eigen::InnerStride<>(n));
      CColMap<S> xcol(xv.data() + i + ts.delta, cin, Eigen::InnerStride<>(n));
      ycol.noalias() -= tap * xcol;
    }
  }

  return core::make_op<S>(
      std::move(y), {x, w, b},
      [x, w, cin, h, iw, cout, n](const TensorT<S>& g,
                                  const GradSinkT<S>& sink) {
        CMatMap<S> gm(g.data(), cout, n);
        CMatMap<S> xm(x.value().data(), cin, n);
        RowMat<S> tap;
        if (auto* gw = sink(1)) {
          RowMat<S> gt(cout, cin);
          for (int64_t t = 0; t < 9; ++t) {
            const TapSpan ts = tap_span(t / 3, t % 3, h, iw);
            if (ts.hi == ts.lo) continue;
            gt.noalias() =
                gm.middleCols(ts.lo, ts.hi - ts.lo) *
                xm.middleCols(ts.lo + ts.delta, ts.hi - ts.lo).transpose();
            if (ts.bad_x >= 0) {
              for (int64_t oy = ts.r0; oy < ts.r1; ++oy) {
                const int64_t i = oy * iw + ts.bad_x;
                if (i < ts.lo || i >= ts.hi) continue;
                CColMap<S> gcol(g.data() + i, cout, Eigen::InnerStride<>(n));
                CColMap<S> xcol(x.value().data() + i + ts.delta, cin,
                                Eigen::InnerStride<>(n));
                gt.noalias() -= gcol * xcol.transpose();
              }
            }
            S* dst = gw->data();
            const int64_t ky = t / 3, kx = t % 3;
            for (int64_t co = 0; co < cout; ++co)
              for (int64_t ci = 0; ci < cin; ++ci)
                dst[((co * cin + ci) * 3 + ky) * 3 + kx] += gt(co, ci);
          }
        }
        if (auto* gb = sink(2)) {
          for (int64_t c = 0; c < cout; ++c) {
            const S* row = g.data() + c * n;
            S acc(0);
            for (int64_t i = 0; i < n; ++i) acc += row[i];
            (*gb)[c] += acc;
          }
        }
        if (auto* gx = sink(0)) {
          MatMap<S> gxm(gx->data(), cin, n);
          for (int64_t t = 0; t < 9; ++t) {
            const TapSpan ts = tap_span(t / 3, t % 3, h, iw);
            if (ts.hi == ts.lo) continue;
            pack_tap(w.value().data(), cout, cin, t / 3, t % 3, &tap);
            gxm.middleCols(ts.lo + ts.delta, ts.hi - ts.lo).noalias() +=
                tap.transpose() * gm.middleCols(ts.lo, ts.hi - ts.lo);
            if (ts.bad_x < 0) continue;
            for (int64_t oy = ts.r0; oy < ts.r1; ++oy) {
              const int64_t i = oy * iw + ts.bad_x;
              if (i < ts.lo || i >= ts.hi) continue;
              ColMap<S> gxcol(gx->data() + i + ts.delta, cin,
                              Eigen::InnerStride<>(n));
              CColMap<S> gcol(g.data() + i, cout, Eigen::InnerStride<>(n));
              gxcol.noalias() -= tap.transpose() * gcol;
            }
          }
        }
      });
}

}  // namespace detail

// x: [cin, h, w], w: [cout, cin, kh, kw], b: [cout]. Output
// [cout, oh, ow] with oh/ow from the usual stride/pad arithmetic.
template <class S>
VarT<S> conv2d(const VarT<S>& x, const VarT<S>& w, const VarT<S>& b,
               int64_t stride, int64_t pad) {
  const auto& xv = x.value();
  const auto& wv = w.value();
  const auto& bv = b.value();
  if (xv.rank() != 3 || wv.rank() != 4 || bv.rank() != 1) {
    throw ShapeError("conv2d: expected x CHW, w [cout,cin,kh,kw], b [cout]");
  }
  const int64_t cin = xv.dim(0), h = xv.dim(1), iw = xv.dim(2);
  const int64_t cout = wv.dim(0), kh = wv.dim(2), kw = wv.dim(3);
  if (wv.dim(1) != cin) {
    throw ShapeError("conv2d: weight cin " + std::to_string(wv.dim(1)) +
                     " does not match input channels " + std::to_string(cin));
  }
  if (bv.dim(0) != cout) throw ShapeError("conv2d: bias size mismatch");
  if (stride < 1 || pad < 0) throw ShapeError("conv2d: bad stride/pad");
  const int64_t oh = detail::conv_out_dim(h, kh, stride, pad);
  const int64_t ow = detail::conv_out_dim(iw, kw, stride, pad);
  if (oh <= 0 || ow <= 0) {
    throw ShapeError("conv2d: kernel does not fit input " +
                     core::shape_str(xv.shape()));
  }
  if (stride == 1 && pad == 1 && kh == 3 && kw == 3) {
    return detail::conv3x3_same(x, w, b);
  }
  const int64_t K = cin * kh * kw;
  const int64_t N = oh * ow;

  auto xcol = std::make_shared<std::vector<S>>(static_cast<size_t>(K * N));
  detail::im2col(xv.data(), cin, h, iw, kh, kw, stride, pad, oh, ow,
                 xcol->data());

  TensorT<S> y({cout, oh, ow});
  detail::MatMap<S>(y.data(), cout, N).noalias() =
      detail::CMatMap<S>(wv.data(), cout, K) *
      detail::CMatMap<S>(xcol->data(), K, N);
  for (int64_t c = 0; c < cout; ++c) {
    S bias = bv[c];
    S* row = y.data() + c * N;
    for (int64_t i = 0; i < N; ++i) row[i] += bias;
  }

  // The cached column matrix is only needed to form weight gradients.
  bool keep_xcol = core::grad_enabled() && w.requires_grad();
  if (!keep_xcol) xcol.reset();

  return core::make_op<S>(
      std::move(y), {x, w, b},
      [x, w, xcol, cin, h, iw, cout, kh, kw, stride, pad, oh, ow, K, N](
          const TensorT<S>& g, const GradSinkT<S>& sink) {
        if (auto* gw = sink(1)) {
          detail::MatMap<S>(gw->data(), cout, K).noalias() +=
              detail::CMatMap<S>(g.data(), cout, N) *
              detail::CMatMap<S>(xcol->data(), K, N).transpose();
        }
        if (auto* gb = sink(2)) {
          for (int64_t c = 0; c < cout; ++c) {
            const S* row = g.data() + c * N;
            S acc(0);
            for (int64_t i = 0; i < N; ++i) acc += row[i];
            (*gb)[c] += acc;
          }
        }
        if (auto* gx = sink(0)) {
          std::vector<S> dcol(static_cast<size_t>(K * N));
          detail::MatMap<S>(dcol.data(), K, N).noalias() =
              detail::CMatMap<S>(w.value().data(), cout, K).transpose() *
              detail::CMatMap<S>(g.data(), cout, N);
          detail::col2im_add(dcol.data(), cin, h, iw, kh, kw, stride, pad, oh,
                             ow, gx->data());
        }
      });
}

// One convolution with its parameters and fixed geometry.
template <class S>
struct Conv2dLayer {
  VarT<S> w, b;
  int64_t stride = 1;
  int64_t pad = 1;

  // He-uniform weights, U(-r, r) bias with r = 1/sqrt(fan_in). Draws happen
  // in double and are cast to S, so every precision sees the same values.
  static Conv2dLayer he_init(core::Rng& rng, int64_t cout, int64_t cin,
                             int64_t k, int64_t stride, int64_t pad,
                             bool trainable = true) {
    int64_t fan_in = cin * k * k;
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    core::Tensor wd({cout, cin, k, k});
    for (int64_t i = 0; i < wd.numel(); ++i) wd[i] = rng.uniform(-bound, bound);
    double bbound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    core::Tensor bd({cout});
    for (int64_t i = 0; i < cout; ++i) bd[i] = rng.uniform(-bbound, bbound);
    Conv2dLayer layer;
    layer.w = VarT<S>::leaf(wd.template cast<S>(), trainable);
    layer.b = VarT<S>::leaf(bd.template cast<S>(), trainable);
    layer.stride = stride;
    layer.pad = pad;
    return layer;
  }

  static Conv2dLayer zero_init(int64_t cout, int64_t cin, int64_t k,
                               int64_t stride, int64_t pad,
                               bool trainable = true) {
    Conv2dLayer layer;
    layer.w = VarT<S>::leaf(TensorT<S>({cout, cin, k, k}), trainable);
    layer.b = VarT<S>::leaf(TensorT<S>({cout}), trainable);
    layer.stride = stride;
    layer.pad = pad;
    return layer;
  }

  VarT<S> operator()(const VarT<S>& x) const {
    return conv2d(x, w, b, stride, pad);
  }

  void collect(const std::string& prefix,
               std::vector<core::NamedParamT<S>>* out) const {
    out->push_back({prefix + ".w", w});
    out->push_back({prefix + ".b", b});
  }
};

}  // namespace samdistill::models
