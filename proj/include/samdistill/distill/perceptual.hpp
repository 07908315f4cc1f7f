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

#include "samdistill/core/blob_file.hpp"
#include "samdistill/core/instrument.hpp"
#include "samdistill/models/conv.hpp"

namespace samdistill::distill {

using core::VarT;

// Frozen feature extractor used by the relation losses. Three stride-2
// convolutions take the image to 1/8 resolution and a 1x1 projection lifts
// it to out_channels, so a [3, H, W] image maps to
// [out_channels, H/8, W/8]. The default activation is softplus: a smooth
// feature map keeps finite-difference audits of the losses well behaved.
//
// kind "fixed_random" draws weights from a seeded stream. kind "pretrained"
// loads them from a weights file written by write_perceptual_weights (the
// file must exist; there is no silent fallback).
struct PerceptualConfig {
  std::string kind = "fixed_random";  // "fixed_random" or "pretrained"
  std::string weights_path;
  int64_t width1 = 16;
  int64_t width2 = 32;
  int64_t width3 = 64;
  int64_t out_channels = 512;
  std::string activation = "softplus";
};

inline constexpr char kPerceptualMagic[] = "SDPW1000";

template <class S>
class PerceptualExtractor {
 public:
  PerceptualExtractor(const PerceptualConfig& cfg, uint64_t seed) : cfg_(cfg) {
    if (cfg.width1 < 1 || cfg.width2 < 1 || cfg.width3 < 1 ||
        cfg.out_channels < 1) {
      throw ConfigError("perceptual extractor widths must be >= 1");
    }
    if (cfg.kind == "fixed_random") {
      core::Rng rng(seed);
      init_layers(rng);
    } else if (cfg.kind == "pretrained") {
      load_weights();
    } else {
      throw ConfigError("unknown perceptual kind '" + cfg.kind + "'");
    }
  }

  // [3, H, W] -> [out_channels, ceil-free H/8, W/8] by three stride-2 convs.
  VarT<S> forward(const VarT<S>& image) const {
    core::counters().perceptual_forwards++;
    VarT<S> f = models::apply_activation<S>(cfg_.activation, l1_(image));
    f = models::apply_activation<S>(cfg_.activation, l2_(f));
    f = models::apply_activation<S>(cfg_.activation, l3_(f));
    return proj_(f);
  }

  std::vector<core::NamedParamT<S>> params() const {
    std::vector<core::NamedParamT<S>> out;
    l1_.collect("perceptual.l1", &out);
    l2_.collect("perceptual.l2", &out);
    l3_.collect("perceptual.l3", &out);
    proj_.collect("perceptual.proj", &out);
    return out;
  }

  const PerceptualConfig& config() const { return cfg_; }

 private:
  void init_layers(core::Rng& rng) {
    // trainable=false: these weights are constants of the loss, never
    // parameters of it.
    l1_ = models::Conv2dLayer<S>::he_init(rng, cfg_.width1, 3, 3, 2, 1, false);
    l2_ = models::Conv2dLayer<S>::he_init(rng, cfg_.width2, cfg_.width1, 3, 2, 1,
                                          false);
    l3_ = models::Conv2dLayer<S>::he_init(rng, cfg_.width3, cfg_.width2, 3, 2, 1,
                                          false);
    proj_ = models::Conv2dLayer<S>::he_init(rng, cfg_.out_channels, cfg_.width3,
                                            1, 1, 0, false);
  }

  void load_weights() {
    if (cfg_.weights_path.empty()) {
      throw ConfigError("perceptual kind 'pretrained' needs weights_path");
    }
    core::BlobFile file =
        core::read_blob_file(cfg_.weights_path, kPerceptualMagic);
    if (file.blobs.size() != 8) {
      throw IoError("perceptual weights file must hold 8 tensors, got " +
                    std::to_string(file.blobs.size()));
    }
    auto expect = [&](size_t idx, core::Shape shape) -> VarT<S> {
      const core::Tensor& t = file.blobs[idx];
      if (t.shape() != shape) {
        throw IoError("perceptual weights blob " + std::to_string(idx) +
                      " has shape " + core::shape_str(t.shape()) +
                      ", expected " + core::shape_str(shape));
      }
      return VarT<S>::leaf(t.template cast<S>(), false);
    };
    l1_ = {expect(0, {cfg_.width1, 3, 3, 3}), expect(1, {cfg_.width1}), 2, 1};
    l2_ = {expect(2, {cfg_.width2, cfg_.width1, 3, 3}), expect(3, {cfg_.width2}),
           2, 1};
    l3_ = {expect(4, {cfg_.width3, cfg_.width2, 3, 3}), expect(5, {cfg_.width3}),
           2, 1};
    proj_ = {expect(6, {cfg_.out_channels, cfg_.width3, 1, 1}),
             expect(7, {cfg_.out_channels}), 1, 0};
  }

  PerceptualConfig cfg_;
  models::Conv2dLayer<S> l1_, l2_, l3_, proj_;
};

// Serializes an extractor's weights so another instance can load them with
// kind = "pretrained".
template <class S>
void write_perceptual_weights(const std::string& path,
                              const PerceptualExtractor<S>& extractor) {
  core::BlobFile file;
  file.header["format"] = "perceptual-weights";
  file.header["version"] = 1;
  const PerceptualConfig& cfg = extractor.config();
  file.header["width1"] = cfg.width1;
  file.header["width2"] = cfg.width2;
  file.header["width3"] = cfg.width3;
  file.header["out_channels"] = cfg.out_channels;
  file.header["activation"] = cfg.activation;
  for (const auto& [name, var] : extractor.params()) {
    file.blobs.push_back(var.value().template cast<double>());
  }
  core::write_blob_file(path, kPerceptualMagic, file);
}

}  // namespace samdistill::distill
