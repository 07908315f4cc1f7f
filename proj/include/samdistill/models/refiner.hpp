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

#include "samdistill/core/image.hpp"
#include "samdistill/core/instrument.hpp"
#include "samdistill/models/conv.hpp"

namespace samdistill::models {

// Pack a mask set into a fixed [slots, H, W] tensor of 0/1 channels:
// channel i is mask i, channels beyond the mask count stay zero, masks
// beyond `slots` are dropped. Gives the network a fixed-arity view of a
// variable-size segmentation.
template <class S>
TensorT<S> pack_masks(const core::MaskSet& masks, int64_t slots, int64_t h,
                      int64_t w) {
  if (slots < 1) throw ConfigError("pack_masks: slots must be >= 1");
  core::MaskSet resized = (masks.height() == h && masks.width() == w)
                              ? masks
                              : core::resize_mask_set(masks, h, w);
  TensorT<S> out({slots, h, w});
  int64_t n = std::min<int64_t>(slots, resized.n());
  for (int64_t i = 0; i < n; ++i) {
    const uint8_t* bits = resized.mask_data(i);
    S* dst = out.data() + i * h * w;
    for (int64_t p = 0; p < h * w; ++p) dst[p] = static_cast<S>(bits[p]);
  }
  return out;
}

// Fusion unit: carries a running fused representation past one backbone
// block. The carried features are resized to the block's resolution,
// concatenated with the block features, mixed by two convolutions, and
// (optionally) modulated by a single-channel attention gate derived from
// the packed masks.
struct SPFUnitConfig {
  int64_t hidden = 16;
  bool attention = true;
  std::string activation = "relu";
};

template <class S>
class SPFUnit {
 public:
  SPFUnit() = default;

  SPFUnit(const SPFUnitConfig& cfg, core::Rng& rng, int64_t carry_channels,
          int64_t block_channels, int64_t out_channels, int64_t mask_slots)
      : cfg_(cfg) {
    if (cfg.hidden < 1) throw ConfigError("SPF unit needs hidden >= 1");
    mix1_ = Conv2dLayer<S>::he_init(rng, cfg.hidden,
                                    carry_channels + block_channels, 3, 1, 1);
    mix2_ = Conv2dLayer<S>::he_init(rng, out_channels, cfg.hidden, 3, 1, 1);
    // The gate layer is constructed (and its init draws consumed) even when
    // attention is ablated, so toggling the flag never shifts other layers'
    // initialization.
    attn_ = Conv2dLayer<S>::he_init(rng, 1, mask_slots, 1, 1, 0);
  }

  // carry: [carry_channels, h', w'] from the previous unit (or the packed
  // network input for the first one); block: [block_channels, h, w];
  // masks_packed: [mask_slots, H, W] at image resolution.
  VarT<S> forward(const VarT<S>& carry, const VarT<S>& block,
                  const VarT<S>& masks_packed) const {
    applications_++;
    int64_t h = block.value().dim(1), w = block.value().dim(2);
    VarT<S> carried = (carry.value().dim(1) == h && carry.value().dim(2) == w)
                          ? carry
                          : core::resize_bilinear(carry, h, w);
    VarT<S> mixed = core::concat_channels<S>({carried, block});
    VarT<S> f = apply_activation<S>(cfg_.activation, mix1_(mixed));
    f = apply_activation<S>(cfg_.activation, mix2_(f));
    if (cfg_.attention) {
      VarT<S> m = core::resize_nearest(masks_packed, h, w);
      VarT<S> gate = core::sigmoid(attn_(m));
      f = core::mul_gate(f, gate);
    }
    return f;
  }

  int64_t applications() const { return applications_; }
  void reset_applications() const { applications_ = 0; }
  const SPFUnitConfig& config() const { return cfg_; }

  void collect(const std::string& prefix,
               std::vector<core::NamedParamT<S>>* out) const {
    mix1_.collect(prefix + ".mix1", out);
    mix2_.collect(prefix + ".mix2", out);
    attn_.collect(prefix + ".attn", out);
  }

 private:
  SPFUnitConfig cfg_;
  Conv2dLayer<S> mix1_, mix2_, attn_;
  mutable int64_t applications_ = 0;
};

// Refinement network. A small conv trunk runs on the restored image; one
// fusion unit per trunk block threads the mask-conditioned representation
// through, and a zero-init tail adds a residual correction on top of the
// input image, so the whole cascade starts out as the identity.
struct RefinerConfig {
  int64_t channels = 16;
  int64_t n_blocks = 2;
  int64_t mask_slots = 8;
  SPFUnitConfig spf;
  std::string activation = "relu";
  bool zero_init_tail = true;
};

template <class S>
class Refiner {
 public:
  Refiner(const RefinerConfig& cfg, uint64_t seed) : cfg_(cfg) {
    if (cfg.channels < 1 || cfg.n_blocks < 1 || cfg.mask_slots < 1) {
      throw ConfigError("refiner needs channels, n_blocks, mask_slots >= 1");
    }
    core::Rng rng(seed);
    head_ = Conv2dLayer<S>::he_init(rng, cfg.channels, 3, 3, 1, 1);
    for (int64_t i = 0; i < cfg.n_blocks; ++i) {
      blocks_.push_back(
          Conv2dLayer<S>::he_init(rng, cfg.channels, cfg.channels, 3, 1, 1));
      // The first unit carries the packed (image + masks) input.
      int64_t carry = i == 0 ? 3 + cfg.mask_slots : cfg.channels;
      units_.emplace_back(cfg.spf, rng, carry, cfg.channels, cfg.channels,
                          cfg.mask_slots);
    }
    tail_ = cfg.zero_init_tail
                ? Conv2dLayer<S>::zero_init(3, cfg.channels, 3, 1, 1)
                : Conv2dLayer<S>::he_init(rng, 3, cfg.channels, 3, 1, 1);
  }

  // image: restored image [3, H, W]; masks_packed: [mask_slots, H, W].
  VarT<S> forward(const VarT<S>& image, const VarT<S>& masks_packed) const {
    core::counters().refiner_forwards++;
    VarT<S> f = apply_activation<S>(cfg_.activation, head_(image));
    VarT<S> carry = core::concat_channels<S>({image, masks_packed});
    for (size_t i = 0; i < blocks_.size(); ++i) {
      f = apply_activation<S>(cfg_.activation, blocks_[i](f));
      carry = units_[i].forward(carry, f, masks_packed);
    }
    return core::add(image, tail_(carry));
  }

  const std::vector<SPFUnit<S>>& units() const { return units_; }
  void reset_unit_applications() const {
    for (const auto& u : units_) u.reset_applications();
  }

  std::vector<core::NamedParamT<S>> params() const {
    std::vector<core::NamedParamT<S>> out;
    head_.collect("refiner.head", &out);
    for (size_t i = 0; i < blocks_.size(); ++i) {
      blocks_[i].collect("refiner.block" + std::to_string(i), &out);
      units_[i].collect("refiner.spf" + std::to_string(i), &out);
    }
    tail_.collect("refiner.tail", &out);
    return out;
  }

  const RefinerConfig& config() const { return cfg_; }

 private:
  RefinerConfig cfg_;
  Conv2dLayer<S> head_;
  std::vector<Conv2dLayer<S>> blocks_;
  std::vector<SPFUnit<S>> units_;
  Conv2dLayer<S> tail_;
};

}  // namespace samdistill::models
