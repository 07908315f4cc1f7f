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

#include "samdistill/verify/oracles.hpp"

#include <cmath>

#include "samdistill/core/error.hpp"

namespace samdistill::verify {

double ref_smooth_l1(const core::Tensor& a, const core::Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("ref_smooth_l1 shape mismatch");
  double acc = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    double d = a[i] - b[i];
    double ad = std::fabs(d);
    acc += ad <= 1.0 ? 0.5 * d * d : ad - 0.5;
  }
  return acc / static_cast<double>(a.numel());
}

RefRelation ref_relation_matrix(const core::Tensor& feats,
                                const core::MaskSet& masks) {
  const int64_t c = feats.dim(0), h = feats.dim(1), w = feats.dim(2);
  if (masks.height() != h || masks.width() != w) {
    throw ShapeError("ref_relation_matrix mask grid mismatch");
  }
  const int64_t hw = h * w;

  std::vector<std::vector<double>> gated;
  RefRelation out;
  for (int64_t i = 0; i < masks.n(); ++i) {
    std::vector<double> v(static_cast<size_t>(c * hw));
    for (int64_t ch = 0; ch < c; ++ch) {
      for (int64_t p = 0; p < hw; ++p) {
        double gate = static_cast<double>(masks.mask_data(i)[p]);
        v[static_cast<size_t>(ch * hw + p)] = feats[ch * hw + p] * gate;
      }
    }
    double norm2 = 0.0;
    for (double x : v) norm2 += x * x;
    if (std::sqrt(norm2) > 1e-8) {
      gated.push_back(std::move(v));
      out.kept.push_back(i);
    }
  }

  const size_t m = gated.size();
  out.values.assign(m, std::vector<double>(m, 0.0));
  for (size_t a = 0; a < m; ++a) {
    for (size_t b = 0; b < m; ++b) {
      if (a == b) {
        out.values[a][b] = 1.0;
        continue;
      }
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (size_t k = 0; k < gated[a].size(); ++k) {
        dot += gated[a][k] * gated[b][k];
        na += gated[a][k] * gated[a][k];
        nb += gated[b][k] * gated[b][k];
      }
      out.values[a][b] = dot / (std::sqrt(na) * std::sqrt(nb));
    }
  }
  return out;
}

double ref_sgr(const RefRelation& r1, const RefRelation& r2) {
  const size_t m = r1.values.size();
  if (m != r2.values.size() || m < 2) {
    throw DegenerateRelationError("ref_sgr needs two matrices of equal m >= 2");
  }
  double acc = 0.0;
  for (size_t a = 0; a < m; ++a) {
    for (size_t b = 0; b < m; ++b) {
      if (a != b) acc += std::fabs(r1.values[a][b] - r2.values[a][b]);
    }
  }
  return acc / static_cast<double>(m * m - m);
}

double ref_mse(const core::Tensor& a, const core::Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("ref_mse shape mismatch");
  double acc = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    acc += (a[i] - b[i]) * (a[i] - b[i]);
  }
  return acc / static_cast<double>(a.numel());
}

double ref_psnr(const core::Tensor& a, const core::Tensor& b) {
  double m = ref_mse(a, b);
  if (m < 1e-10) return 100.0;
  return 10.0 * std::log10(1.0 / m);
}

double ref_ssim(const core::Tensor& a, const core::Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("ref_ssim shape mismatch");
  const int64_t c = a.dim(0), h = a.dim(1), w = a.dim(2);
  const int win = 11;
  const double sigma = 1.5;
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;

  double window[11][11];
  double wsum = 0.0;
  for (int y = 0; y < win; ++y) {
    for (int x = 0; x < win; ++x) {
      double dy = y - win / 2, dx = x - win / 2;
      window[y][x] = std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
      wsum += window[y][x];
    }
  }
  for (int y = 0; y < win; ++y) {
    for (int x = 0; x < win; ++x) window[y][x] /= wsum;
  }

  const int64_t hw = h * w;
  double total = 0.0;
  for (int64_t ch = 0; ch < c; ++ch) {
    const double* pa = a.data() + ch * hw;
    const double* pb = b.data() + ch * hw;
    double acc = 0.0;
    int64_t count = 0;
    for (int64_t oy = 0; oy + win <= h; ++oy) {
      for (int64_t ox = 0; ox + win <= w; ++ox) {
        double ux = 0.0, uy = 0.0, xx = 0.0, yy = 0.0, xy = 0.0;
        for (int y = 0; y < win; ++y) {
          for (int x = 0; x < win; ++x) {
            double wv = window[y][x];
            double va = pa[(oy + y) * w + ox + x];
            double vb = pb[(oy + y) * w + ox + x];
            ux += wv * va;
            uy += wv * vb;
            xx += wv * va * va;
            yy += wv * vb * vb;
            xy += wv * va * vb;
          }
        }
        double vx = xx - ux * ux, vy = yy - uy * uy, vxy = xy - ux * uy;
        double num = (2.0 * ux * uy + c1) * (2.0 * vxy + c2);
        double den = (ux * ux + uy * uy + c1) * (vx + vy + c2);
        acc += num / den;
        count++;
      }
    }
    total += acc / static_cast<double>(count);
  }
  return total / static_cast<double>(c);
}

}  // namespace samdistill::verify
