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
#include <string>
#include <vector>

#include "samdistill/core/autograd.hpp"

namespace samdistill::train {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam bound to a fixed parameter list. Moment buffers live in the working
// precision; the bias corrections are computed in double and cast, so the
// update arithmetic is identical for every instance at a given precision.
template <class S>
class Adam {
 public:
  Adam(const AdamConfig& cfg, std::vector<core::NamedParamT<S>> params)
      : cfg_(cfg), params_(std::move(params)) {
    if (cfg.lr <= 0.0) throw ConfigError("adam lr must be > 0");
    if (cfg.beta1 < 0.0 || cfg.beta1 >= 1.0 || cfg.beta2 < 0.0 ||
        cfg.beta2 >= 1.0) {
      throw ConfigError("adam betas must lie in [0, 1)");
    }
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& [name, var] : params_) {
      m_.emplace_back(var.value().shape());
      v_.emplace_back(var.value().shape());
    }
  }

  // Parameters without a gradient entry are left untouched, moments
  // included, exactly as if they were absent from this step.
  void step(const core::GradMapT<S>& grads) {
    t_++;
    S inv_c1 = static_cast<S>(1.0 / (1.0 - std::pow(cfg_.beta1, t_)));
    S inv_c2 = static_cast<S>(1.0 / (1.0 - std::pow(cfg_.beta2, t_)));
    S b1 = static_cast<S>(cfg_.beta1), b2 = static_cast<S>(cfg_.beta2);
    S lr = static_cast<S>(cfg_.lr), eps = static_cast<S>(cfg_.eps);
    for (size_t i = 0; i < params_.size(); ++i) {
      const core::TensorT<S>* g = grads.find(params_[i].second);
      if (!g) continue;
      core::TensorT<S>& p = params_[i].second.mutable_value();
      core::TensorT<S>& m = m_[i];
      core::TensorT<S>& v = v_[i];
      for (int64_t k = 0; k < p.numel(); ++k) {
        S gk = (*g)[k];
        m[k] = b1 * m[k] + (S(1) - b1) * gk;
        v[k] = b2 * v[k] + (S(1) - b2) * gk * gk;
        S mhat = m[k] * inv_c1;
        S vhat = v[k] * inv_c2;
        p[k] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }

  int64_t t() const { return t_; }
  void set_t(int64_t t) { t_ = t; }
  const std::vector<core::NamedParamT<S>>& params() const { return params_; }
  std::vector<core::TensorT<S>>& moments1() { return m_; }
  std::vector<core::TensorT<S>>& moments2() { return v_; }
  const std::vector<core::TensorT<S>>& moments1() const { return m_; }
  const std::vector<core::TensorT<S>>& moments2() const { return v_; }

 private:
  AdamConfig cfg_;
  std::vector<core::NamedParamT<S>> params_;
  std::vector<core::TensorT<S>> m_, v_;
  int64_t t_ = 0;
};

}  // namespace samdistill::train
