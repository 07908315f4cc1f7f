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

#include "json.hpp"
#include "samdistill/distill/perceptual.hpp"
#include "samdistill/models/baseline.hpp"
#include "samdistill/models/refiner.hpp"
#include "samdistill/segmenter/segmenter.hpp"
#include "samdistill/train/adam.hpp"

namespace samdistill::models {
void to_json(nlohmann::json& j, const BaselineIRConfig& c);
void from_json(const nlohmann::json& j, BaselineIRConfig& c);
void to_json(nlohmann::json& j, const SPFUnitConfig& c);
void from_json(const nlohmann::json& j, SPFUnitConfig& c);
void to_json(nlohmann::json& j, const RefinerConfig& c);
void from_json(const nlohmann::json& j, RefinerConfig& c);
}  // namespace samdistill::models

namespace samdistill::distill {
void to_json(nlohmann::json& j, const PerceptualConfig& c);
void from_json(const nlohmann::json& j, PerceptualConfig& c);
}  // namespace samdistill::distill

namespace samdistill::segmenter {
void to_json(nlohmann::json& j, const SegmenterConfig& c);
void from_json(const nlohmann::json& j, SegmenterConfig& c);
}  // namespace samdistill::segmenter

namespace samdistill::train {

// Everything one training run depends on. Field names map 1:1 onto the JSON
// config file; dotted override paths follow the same names.
struct TrainConfig {
  uint64_t seed = 0;
  std::string precision = "float32";  // "float32" or "float64"
  int64_t steps = 2000;
  int64_t batch_size = 8;
  double lambda1 = 0.005;
  double lambda2 = 200.0;
  // Trains the restoration network alone: no refiner, no segmenter, no
  // distillation terms. Equivalent to lambda1 = lambda2 = 0, minus the cost.
  bool student_only = false;
  bool detach_cascade_input = true;
  int64_t log_every = 50;
  int64_t eval_every = 500;
  int64_t checkpoint_every = 0;  // 0 disables periodic checkpoints
  std::string train_manifest;
  std::string val_manifest;
  std::string out_dir;  // JSONL log, checkpoints, effective config echo
  AdamConfig adam;
  models::BaselineIRConfig student;
  models::RefinerConfig refiner;
  distill::PerceptualConfig perceptual;
  segmenter::SegmenterConfig segmenter;

  void validate() const;
};

void to_json(nlohmann::json& j, const AdamConfig& c);
void from_json(const nlohmann::json& j, AdamConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

// Overlays patch onto base recursively. Keys absent from base are rejected
// with the list of valid keys, so config typos fail loudly. Works on any
// defaults-shaped JSON tree, not just TrainConfig.
void merge_config(nlohmann::json& base, const nlohmann::json& patch);

// Sets one dotted path in a config JSON tree, e.g. "adam.lr=0.001" or
// "student.channels=16". The path must already exist (so typos fail loudly,
// with the valid keys listed) and the value is parsed to match the type of
// the field it replaces.
void apply_override(nlohmann::json& j, const std::string& assignment);

// Config file (optional; defaults when empty) + overrides -> validated
// config. The merged JSON also round-trips back through the struct.
TrainConfig load_train_config(const std::string& path,
                              const std::vector<std::string>& overrides);

}  // namespace samdistill::train
