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
#include <memory>
#include <vector>

#include "samdistill/core/autograd.hpp"

// Differentiable primitives. Each op validates shapes eagerly, computes its
// value with plain loops, and registers a closure that scatters gradients
// into the sink. abs/relu use the subgradient 0 at the kink.

namespace samdistill::core {

template <class S>
VarT<S> add(const VarT<S>& a, const VarT<S>& b) {
  a.value().check_same_shape(b.value(), "add");
  TensorT<S> out(a.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] + b.value()[i];
  return make_op<S>(std::move(out), {a, b},
                    [](const TensorT<S>& g, const GradSinkT<S>& sink) {
                      if (auto* ga = sink(0)) ga->add_(g);
                      if (auto* gb = sink(1)) gb->add_(g);
                    });
}

template <class S>
VarT<S> sub(const VarT<S>& a, const VarT<S>& b) {
  a.value().check_same_shape(b.value(), "sub");
  TensorT<S> out(a.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] - b.value()[i];
  return make_op<S>(std::move(out), {a, b},
                    [](const TensorT<S>& g, const GradSinkT<S>& sink) {
                      if (auto* ga = sink(0)) ga->add_(g);
                      if (auto* gb = sink(1)) {
                        for (int64_t i = 0; i < g.numel(); ++i) (*gb)[i] -= g[i];
                      }
                    });
}

template <class S>
VarT<S> mul(const VarT<S>& a, const VarT<S>& b) {
  a.value().check_same_shape(b.value(), "mul");
  TensorT<S> out(a.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] * b.value()[i];
  return make_op<S>(std::move(out), {a, b},
                    [a, b](const TensorT<S>& g, const GradSinkT<S>& sink) {
                      if (auto* ga = sink(0)) {
                        for (int64_t i = 0; i < g.numel(); ++i)
                          (*ga)[i] += g[i] * b.value()[i];
                      }
                      if (auto* gb = sink(1)) {
                        for (int64_t i = 0; i < g.numel(); ++i)
                          (*gb)[i] += g[i] * a.value()[i];
                      }
                    });
}

template <class S>
VarT<S> div(const VarT<S>& a, const VarT<S>& b) {
  a.value().check_same_shape(b.value(), "div");
  TensorT<S> out(a.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] / b.value()[i];
  auto out_copy = std::make_shared<TensorT<S>>(out);
  return make_op<S>(
      std::move(out), {a, b},
      [b, out_copy](const TensorT<S>& g, const GradSinkT<S>& sink) {
        if (auto* ga = sink(0)) {
          for (int64_t i = 0; i < g.numel(); ++i)
            (*ga)[i] += g[i] / b.value()[i];
        }
        if (auto* gb = sink(1)) {
          for (int64_t i = 0; i < g.numel(); ++i)
            (*gb)[i] -= g[i] * (*out_copy)[i] / b.value()[i];
        }
      });
}

template <class S>
VarT<S> add_scalar(const VarT<S>& a, S c) {
  TensorT<S> out(a.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] + c;
  return make_op<S>(std::move(out), {a},
                    [](const TensorT<S>& g, const GradSinkT<S>& sink) {
                      if (auto* ga = sink(0)) ga->add_(g);
                    });
}

template <class S>
VarT<S> mul_scalar(const VarT<S>& a, S c) {
  TensorT<S> out(a.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] * c;
  return make_op<S>(std::move(out), {a},
                    [c](const TensorT<S>& g, const GradSinkT<S>& sink) {
                      if (auto* ga = sink(0)) {
                        for (int64_t i = 0; i < g.numel(); ++i)
                          (*ga)[i] += g[i] * c;
                      }
                    });
}

template <class S>
VarT<S> neg(const VarT<S>& a) {
  return mul_scalar(a, S(-1));
}

template <class S>
VarT<S> abs_op(const VarT<S>& a) {
  TensorT<S> out(a.shape());
  for (int64_t i = 0; i < out.numel(); ++i)
    out[i] = a.value()[i] < S(0) ? -a.value()[i] : a.value()[i];
  return make_op<S>(std::move(out), {a},
                    [a](const TensorT<S>& g, const GradSinkT<S>& sink) {
                      if (auto* ga = sink(0)) {
                        for (int64_t i = 0; i < g.numel(); ++i) {
                          S x = a.value()[i];
                          if (x > S(0)) (*ga)[i] += g[i];
                          else if (x < S(0)) (*ga)[i] -= g[i];
                        }
                      }
                    });
}

template <class S>
VarT<S> relu(const VarT<S>& a) {
  TensorT<S> out(a.shape());
  for (int64_t i = 0; i < out.numel(); ++i)
    out[i] = a.value()[i] > S(0) ? a.value()[i] : S(0);
  return make_op<S>(std::move(out), {a},
                    [a](const TensorT<S>& g, const GradSinkT<S>& sink) {
                      if (auto* ga = sink(0)) {
                        for (int64_t i = 0; i < g.numel(); ++i)
                          if (a.value()[i] > S(0)) (*ga)[i] += g[i];
                      }
                    });
}

namespace detail {

template <class S>
inline S softplus_value(S x) {
  // log(1 + exp(x)) with stable tails.
  if (x > S(30)) return x;
  if (x < S(-30)) return std::exp(x);
  return std::log1p(std::exp(x));
}

template <class S>
inline S sigmoid_value(S x) {
  if (x >= S(0)) return S(1) / (S(1) + std::exp(-x));
  S e = std::exp(x);
  return e / (S(1) + e);
}

}  // namespace detail

template <class S>
VarT<S> softplus(const VarT<S>& a) {
  TensorT<S> out(a.shape());
  for (int64_t i = 0; i < out.numel(); ++i)
    out[i] = detail::softplus_value(a.value()[i]);
  return make_op<S>(std::move(out), {a},
                    [a](const TensorT<S>& g, const GradSinkT<S>& sink) {
                      if (auto* ga = sink(0)) {
                        for (int64_t i = 0; i < g.numel(); ++i)
                          (*ga)[i] += g[i] * detail::sigmoid_value(a.value()[i]);
                      }
                    });
}

template <class S>
VarT<S> sigmoid(const VarT<S>& a) {
  TensorT<S> out(a.shape());
  for (int64_t i = 0; i < out.numel(); ++i)
    out[i] = detail::sigmoid_value(a.value()[i]);
  auto sv = std::make_shared<TensorT<S>>(out);
  return make_op<S>(std::move(out), {a},
                    [sv](const TensorT<S>& g, const GradSinkT<S>& sink) {
                      if (auto* ga = sink(0)) {
                        for (int64_t i = 0; i < g.numel(); ++i) {
                          S s = (*sv)[i];
                          (*ga)[i] += g[i] * s * (S(1) - s);
                        }
                      }
                    });
}

template <class S>
VarT<S> sqrt_op(const VarT<S>& a) {
  TensorT<S> out(a.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::sqrt(a.value()[i]);
  auto sv = std::make_shared<TensorT<S>>(out);
  return make_op<S>(std::move(out), {a},
                    [sv](const TensorT<S>& g, const GradSinkT<S>& sink) {
                      if (auto* ga = sink(0)) {
                        for (int64_t i = 0; i < g.numel(); ++i)
                          (*ga)[i] += g[i] / (S(2) * (*sv)[i]);
                      }
                    });
}

template <class S>
VarT<S> sum_all(const VarT<S>& a) {
  S acc(0);
  for (int64_t i = 0; i < a.numel(); ++i) acc += a.value()[i];
  return make_op<S>(TensorT<S>::scalar(acc), {a},
                    [](const TensorT<S>& g, const GradSinkT<S>& sink) {
                      if (auto* ga = sink(0)) {
                        S g0 = g[0];
                        for (int64_t i = 0; i < ga->numel(); ++i) (*ga)[i] += g0;
                      }
                    });
}

template <class S>
VarT<S> mean_all(const VarT<S>& a) {
  S inv = S(1) / static_cast<S>(a.numel());
  S acc(0);
  for (int64_t i = 0; i < a.numel(); ++i) acc += a.value()[i];
  return make_op<S>(TensorT<S>::scalar(acc * inv), {a},
                    [inv](const TensorT<S>& g, const GradSinkT<S>& sink) {
                      if (auto* ga = sink(0)) {
                        S g0 = g[0] * inv;
                        for (int64_t i = 0; i < ga->numel(); ++i) (*ga)[i] += g0;
                      }
                    });
}

// Dot product over the flattened tensors, yielding a scalar.
template <class S>
VarT<S> vdot(const VarT<S>& a, const VarT<S>& b) {
  a.value().check_same_shape(b.value(), "vdot");
  S acc(0);
  for (int64_t i = 0; i < a.numel(); ++i) acc += a.value()[i] * b.value()[i];
  return make_op<S>(TensorT<S>::scalar(acc), {a, b},
                    [a, b](const TensorT<S>& g, const GradSinkT<S>& sink) {
                      S g0 = g[0];
                      if (auto* ga = sink(0)) {
                        for (int64_t i = 0; i < ga->numel(); ++i)
                          (*ga)[i] += g0 * b.value()[i];
                      }
                      if (auto* gb = sink(1)) {
                        for (int64_t i = 0; i < gb->numel(); ++i)
                          (*gb)[i] += g0 * a.value()[i];
                      }
                    });
}

// Mean absolute difference over all entries.
template <class S>
VarT<S> l1_loss(const VarT<S>& a, const VarT<S>& b) {
  return mean_all(abs_op(sub(a, b)));
}

// Channel concatenation of CHW tensors with equal spatial dims.
template <class S>
VarT<S> concat_channels(const std::vector<VarT<S>>& xs) {
  if (xs.empty()) throw ShapeError("concat_channels: no inputs");
  int64_t h = xs[0].value().dim(1), w = xs[0].value().dim(2);
  int64_t ctotal = 0;
  for (const auto& x : xs) {
    if (x.value().rank() != 3 || x.value().dim(1) != h || x.value().dim(2) != w) {
      throw ShapeError("concat_channels: incompatible input " +
                       shape_str(x.value().shape()));
    }
    ctotal += x.value().dim(0);
  }
  TensorT<S> out({ctotal, h, w});
  std::vector<int64_t> offsets;  // flat offset of each input inside out
  int64_t pos = 0;
  for (const auto& x : xs) {
    offsets.push_back(pos);
    int64_t n = x.value().numel();
    for (int64_t i = 0; i < n; ++i) out[pos + i] = x.value()[i];
    pos += n;
  }
  return make_op<S>(
      std::move(out), std::vector<VarT<S>>(xs),
      [offsets](const TensorT<S>& g, const GradSinkT<S>& sink) {
        for (size_t k = 0; k < offsets.size(); ++k) {
          if (auto* gx = sink(k)) {
            int64_t off = offsets[k];
            for (int64_t i = 0; i < gx->numel(); ++i) (*gx)[i] += g[off + i];
          }
        }
      });
}

// Broadcast multiply of a CHW tensor by a single-channel [1,H,W] gate.
template <class S>
VarT<S> mul_gate(const VarT<S>& x, const VarT<S>& gate) {
  if (x.value().rank() != 3 || gate.value().rank() != 3 ||
      gate.value().dim(0) != 1 || gate.value().dim(1) != x.value().dim(1) ||
      gate.value().dim(2) != x.value().dim(2)) {
    throw ShapeError("mul_gate: expected x CHW and gate [1,H,W], got " +
                     shape_str(x.value().shape()) + " and " +
                     shape_str(gate.value().shape()));
  }
  int64_t c = x.value().dim(0), hw = x.value().dim(1) * x.value().dim(2);
  TensorT<S> out(x.shape());
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t p = 0; p < hw; ++p)
      out[ch * hw + p] = x.value()[ch * hw + p] * gate.value()[p];
  return make_op<S>(
      std::move(out), {x, gate},
      [x, gate, c, hw](const TensorT<S>& g, const GradSinkT<S>& sink) {
        if (auto* gx = sink(0)) {
          for (int64_t ch = 0; ch < c; ++ch)
            for (int64_t p = 0; p < hw; ++p)
              (*gx)[ch * hw + p] += g[ch * hw + p] * gate.value()[p];
        }
        if (auto* gg = sink(1)) {
          for (int64_t ch = 0; ch < c; ++ch)
            for (int64_t p = 0; p < hw; ++p)
              (*gg)[p] += g[ch * hw + p] * x.value()[ch * hw + p];
        }
      });
}

namespace detail {

// Precomputed 1-d resampling: out[o] = (1-w[o]) * in[i0[o]] + w[o] * in[i1[o]].
template <class S>
struct LinearAxisMap {
  std::vector<int64_t> i0, i1;
  std::vector<S> w;
};

template <class S>
LinearAxisMap<S> make_linear_axis(int64_t in, int64_t out) {
  LinearAxisMap<S> m;
  m.i0.resize(static_cast<size_t>(out));
  m.i1.resize(static_cast<size_t>(out));
  m.w.resize(static_cast<size_t>(out));
  for (int64_t o = 0; o < out; ++o) {
    double s = (static_cast<double>(o) + 0.5) * static_cast<double>(in) /
                   static_cast<double>(out) -
               0.5;
    if (s < 0.0) s = 0.0;
    double hi = static_cast<double>(in - 1);
    if (s > hi) s = hi;
    int64_t i0 = static_cast<int64_t>(s);
    int64_t i1 = std::min<int64_t>(i0 + 1, in - 1);
    m.i0[static_cast<size_t>(o)] = i0;
    m.i1[static_cast<size_t>(o)] = i1;
    m.w[static_cast<size_t>(o)] = static_cast<S>(s - static_cast<double>(i0));
  }
  return m;
}

inline std::vector<int64_t> make_nearest_axis(int64_t in, int64_t out) {
  std::vector<int64_t> idx(static_cast<size_t>(out));
  for (int64_t o = 0; o < out; ++o) {
    int64_t i = static_cast<int64_t>((static_cast<double>(o) + 0.5) *
                                     static_cast<double>(in) /
                                     static_cast<double>(out));
    idx[static_cast<size_t>(o)] = std::min(i, in - 1);
  }
  return idx;
}

}  // namespace detail

// Bilinear resample of a CHW tensor to [C, oh, ow], pixel-center aligned.
template <class S>
VarT<S> resize_bilinear(const VarT<S>& x, int64_t oh, int64_t ow) {
  if (x.value().rank() != 3) {
    throw ShapeError("resize_bilinear: input must be CHW");
  }
  if (oh <= 0 || ow <= 0) throw ShapeError("resize_bilinear: target must be >= 1");
  int64_t c = x.value().dim(0), ih = x.value().dim(1), iw = x.value().dim(2);
  auto my = detail::make_linear_axis<S>(ih, oh);
  auto mx = detail::make_linear_axis<S>(iw, ow);
  TensorT<S> out({c, oh, ow});
  for (int64_t ch = 0; ch < c; ++ch) {
    for (int64_t y = 0; y < oh; ++y) {
      S wy = my.w[static_cast<size_t>(y)];
      int64_t y0 = my.i0[static_cast<size_t>(y)], y1 = my.i1[static_cast<size_t>(y)];
      for (int64_t px = 0; px < ow; ++px) {
        S wx = mx.w[static_cast<size_t>(px)];
        int64_t x0 = mx.i0[static_cast<size_t>(px)], x1 = mx.i1[static_cast<size_t>(px)];
        S v00 = x.value().at3(ch, y0, x0), v01 = x.value().at3(ch, y0, x1);
        S v10 = x.value().at3(ch, y1, x0), v11 = x.value().at3(ch, y1, x1);
        S top = v00 + wx * (v01 - v00);
        S bot = v10 + wx * (v11 - v10);
        out.at3(ch, y, px) = top + wy * (bot - top);
      }
    }
  }
  return make_op<S>(
      std::move(out), {x},
      [c, oh, ow, my, mx](const TensorT<S>& g, const GradSinkT<S>& sink) {
        auto* gx = sink(0);
        if (!gx) return;
        for (int64_t ch = 0; ch < c; ++ch) {
          for (int64_t y = 0; y < oh; ++y) {
            S wy = my.w[static_cast<size_t>(y)];
            int64_t y0 = my.i0[static_cast<size_t>(y)], y1 = my.i1[static_cast<size_t>(y)];
            for (int64_t px = 0; px < ow; ++px) {
              S wx = mx.w[static_cast<size_t>(px)];
              int64_t x0 = mx.i0[static_cast<size_t>(px)], x1 = mx.i1[static_cast<size_t>(px)];
              S go = g.at3(ch, y, px);
              gx->at3(ch, y0, x0) += go * (S(1) - wy) * (S(1) - wx);
              gx->at3(ch, y0, x1) += go * (S(1) - wy) * wx;
              gx->at3(ch, y1, x0) += go * wy * (S(1) - wx);
              gx->at3(ch, y1, x1) += go * wy * wx;
            }
          }
        }
      });
}

// Nearest-neighbor resample of a CHW tensor to [C, oh, ow].
template <class S>
VarT<S> resize_nearest(const VarT<S>& x, int64_t oh, int64_t ow) {
  if (x.value().rank() != 3) {
    throw ShapeError("resize_nearest: input must be CHW");
  }
  if (oh <= 0 || ow <= 0) throw ShapeError("resize_nearest: target must be >= 1");
  int64_t c = x.value().dim(0), ih = x.value().dim(1), iw = x.value().dim(2);
  auto iy = detail::make_nearest_axis(ih, oh);
  auto ix = detail::make_nearest_axis(iw, ow);
  TensorT<S> out({c, oh, ow});
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t y = 0; y < oh; ++y)
      for (int64_t px = 0; px < ow; ++px)
        out.at3(ch, y, px) =
            x.value().at3(ch, iy[static_cast<size_t>(y)], ix[static_cast<size_t>(px)]);
  return make_op<S>(
      std::move(out), {x},
      [c, oh, ow, iy, ix](const TensorT<S>& g, const GradSinkT<S>& sink) {
        auto* gx = sink(0);
        if (!gx) return;
        for (int64_t ch = 0; ch < c; ++ch)
          for (int64_t y = 0; y < oh; ++y)
            for (int64_t px = 0; px < ow; ++px)
              gx->at3(ch, iy[static_cast<size_t>(y)], ix[static_cast<size_t>(px)]) +=
                  g.at3(ch, y, px);
      });
}

}  // namespace samdistill::core
