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

#include <string>
#include <vector>

#include "samdistill/core/instrument.hpp"
#include "samdistill/models/conv.hpp"

namespace samdistill::models {

// Restoration backbone: head conv, a stack of conv blocks, and a zero-init
// tail whose output is added to the input (global residual). At
// initialization the network is the identity map.
struct BaselineIRConfig {
  int64_t channels = 32;
  int64_t n_blocks = 4;
  std::string activation = "relu";  // "relu" or "softplus"
};

template <class S>
class BaselineModel {
 public:
  BaselineModel(const BaselineIRConfig& cfg, uint64_t seed) : cfg_(cfg) {
    if (cfg.channels < 1 || cfg.n_blocks < 1) {
      throw ConfigError("baseline model needs channels >= 1 and n_blocks >= 1");
    }
    core::Rng rng(seed);
    head_ = Conv2dLayer<S>::he_init(rng, cfg.channels, 3, 3, 1, 1);
    for (int64_t i = 0; i < cfg.n_blocks; ++i) {
      blocks_.push_back(
          Conv2dLayer<S>::he_init(rng, cfg.channels, cfg.channels, 3, 1, 1));
    }
    tail_ = Conv2dLayer<S>::zero_init(3, cfg.channels, 3, 1, 1);
  }

  VarT<S> forward(const VarT<S>& x) const {
    core::counters().baseline_forwards++;
    VarT<S> f = apply_activation<S>(cfg_.activation, head_(x));
    for (const auto& blk : blocks_) {
      f = apply_activation<S>(cfg_.activation, blk(f));
    }
    return core::add(x, tail_(f));
  }

  std::vector<core::NamedParamT<S>> params() const {
    std::vector<core::NamedParamT<S>> out;
    head_.collect("student.head", &out);
    for (size_t i = 0; i < blocks_.size(); ++i) {
      blocks_[i].collect("student.block" + std::to_string(i), &out);
    }
    tail_.collect("student.tail", &out);
    return out;
  }

  const BaselineIRConfig& config() const { return cfg_; }

 private:
  BaselineIRConfig cfg_;
  Conv2dLayer<S> head_;
  std::vector<Conv2dLayer<S>> blocks_;
  Conv2dLayer<S> tail_;
};

}  // namespace samdistill::models
