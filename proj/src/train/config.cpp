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

#include "samdistill/train/config.hpp"

#include <fstream>
#include <sstream>

namespace samdistill::models {

void to_json(nlohmann::json& j, const BaselineIRConfig& c) {
  j = {{"channels", c.channels},
       {"n_blocks", c.n_blocks},
       {"activation", c.activation}};
}

void from_json(const nlohmann::json& j, BaselineIRConfig& c) {
  j.at("channels").get_to(c.channels);
  j.at("n_blocks").get_to(c.n_blocks);
  j.at("activation").get_to(c.activation);
}

void to_json(nlohmann::json& j, const SPFUnitConfig& c) {
  j = {{"hidden", c.hidden},
       {"attention", c.attention},
       {"activation", c.activation}};
}

void from_json(const nlohmann::json& j, SPFUnitConfig& c) {
  j.at("hidden").get_to(c.hidden);
  j.at("attention").get_to(c.attention);
  j.at("activation").get_to(c.activation);
}

void to_json(nlohmann::json& j, const RefinerConfig& c) {
  j = {{"channels", c.channels},       {"n_blocks", c.n_blocks},
       {"mask_slots", c.mask_slots},   {"spf", c.spf},
       {"activation", c.activation},   {"zero_init_tail", c.zero_init_tail}};
}

void from_json(const nlohmann::json& j, RefinerConfig& c) {
  j.at("channels").get_to(c.channels);
  j.at("n_blocks").get_to(c.n_blocks);
  j.at("mask_slots").get_to(c.mask_slots);
  j.at("spf").get_to(c.spf);
  j.at("activation").get_to(c.activation);
  j.at("zero_init_tail").get_to(c.zero_init_tail);
}

}  // namespace samdistill::models

namespace samdistill::distill {

void to_json(nlohmann::json& j, const PerceptualConfig& c) {
  j = {{"kind", c.kind},       {"weights_path", c.weights_path},
       {"width1", c.width1},   {"width2", c.width2},
       {"width3", c.width3},   {"out_channels", c.out_channels},
       {"activation", c.activation}};
}

void from_json(const nlohmann::json& j, PerceptualConfig& c) {
  j.at("kind").get_to(c.kind);
  j.at("weights_path").get_to(c.weights_path);
  j.at("width1").get_to(c.width1);
  j.at("width2").get_to(c.width2);
  j.at("width3").get_to(c.width3);
  j.at("out_channels").get_to(c.out_channels);
  j.at("activation").get_to(c.activation);
}

}  // namespace samdistill::distill

namespace samdistill::segmenter {

void to_json(nlohmann::json& j, const SegmenterConfig& c) {
  j = {{"kind", c.kind},
       {"grid_rows", c.grid_rows},
       {"grid_cols", c.grid_cols},
       {"luminance_bins", c.luminance_bins},
       {"mask_dir", c.mask_dir},
       {"n_max", c.n_max}};
}

void from_json(const nlohmann::json& j, SegmenterConfig& c) {
  j.at("kind").get_to(c.kind);
  j.at("grid_rows").get_to(c.grid_rows);
  j.at("grid_cols").get_to(c.grid_cols);
  j.at("luminance_bins").get_to(c.luminance_bins);
  j.at("mask_dir").get_to(c.mask_dir);
  j.at("n_max").get_to(c.n_max);
}

}  // namespace samdistill::segmenter

namespace samdistill::train {

void to_json(nlohmann::json& j, const AdamConfig& c) {
  j = {{"lr", c.lr}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"eps", c.eps}};
}

void from_json(const nlohmann::json& j, AdamConfig& c) {
  j.at("lr").get_to(c.lr);
  j.at("beta1").get_to(c.beta1);
  j.at("beta2").get_to(c.beta2);
  j.at("eps").get_to(c.eps);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"seed", c.seed},
       {"precision", c.precision},
       {"steps", c.steps},
       {"batch_size", c.batch_size},
       {"lambda1", c.lambda1},
       {"lambda2", c.lambda2},
       {"student_only", c.student_only},
       {"detach_cascade_input", c.detach_cascade_input},
       {"log_every", c.log_every},
       {"eval_every", c.eval_every},
       {"checkpoint_every", c.checkpoint_every},
       {"train_manifest", c.train_manifest},
       {"val_manifest", c.val_manifest},
       {"out_dir", c.out_dir},
       {"adam", c.adam},
       {"student", c.student},
       {"refiner", c.refiner},
       {"perceptual", c.perceptual},
       {"segmenter", c.segmenter}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  j.at("seed").get_to(c.seed);
  j.at("precision").get_to(c.precision);
  j.at("steps").get_to(c.steps);
  j.at("batch_size").get_to(c.batch_size);
  j.at("lambda1").get_to(c.lambda1);
  j.at("lambda2").get_to(c.lambda2);
  j.at("student_only").get_to(c.student_only);
  j.at("detach_cascade_input").get_to(c.detach_cascade_input);
  j.at("log_every").get_to(c.log_every);
  j.at("eval_every").get_to(c.eval_every);
  j.at("checkpoint_every").get_to(c.checkpoint_every);
  j.at("train_manifest").get_to(c.train_manifest);
  j.at("val_manifest").get_to(c.val_manifest);
  j.at("out_dir").get_to(c.out_dir);
  j.at("adam").get_to(c.adam);
  j.at("student").get_to(c.student);
  j.at("refiner").get_to(c.refiner);
  j.at("perceptual").get_to(c.perceptual);
  j.at("segmenter").get_to(c.segmenter);
}

void TrainConfig::validate() const {
  if (precision != "float32" && precision != "float64") {
    throw ConfigError("precision must be float32 or float64, got '" +
                      precision + "'");
  }
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (lambda1 < 0.0 || lambda2 < 0.0) {
    throw ConfigError("lambda1 and lambda2 must be >= 0");
  }
  if (adam.lr <= 0.0) throw ConfigError("adam.lr must be > 0");
  if (log_every < 1) throw ConfigError("log_every must be >= 1");
  if (eval_every < 0 || checkpoint_every < 0) {
    throw ConfigError("eval_every and checkpoint_every must be >= 0");
  }
}

namespace {

std::string key_list(const nlohmann::json& obj) {
  std::string out;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!out.empty()) out += ", ";
    out += it.key();
  }
  return out;
}

// Every key in patch must already exist in base with a structurally
// compatible value; objects merge recursively, everything else replaces.
void merge_checked(nlohmann::json& base, const nlohmann::json& patch,
                   const std::string& where) {
  if (!patch.is_object()) {
    throw ConfigError("config at '" + where + "' must be an object");
  }
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    std::string path = where.empty() ? it.key() : where + "." + it.key();
    if (!base.contains(it.key())) {
      throw ConfigError("unknown config key '" + path + "'; valid keys: " +
                        key_list(base));
    }
    nlohmann::json& slot = base[it.key()];
    if (slot.is_object()) {
      merge_checked(slot, it.value(), path);
    } else {
      slot = it.value();
    }
  }
}

}  // namespace

void merge_config(nlohmann::json& base, const nlohmann::json& patch) {
  merge_checked(base, patch, "");
}

void apply_override(nlohmann::json& j, const std::string& assignment) {
  size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' must look like key=value");
  }
  std::string path = assignment.substr(0, eq);
  std::string raw = assignment.substr(eq + 1);

  nlohmann::json* node = &j;
  size_t start = 0;
  std::string walked;
  while (true) {
    size_t dot = path.find('.', start);
    std::string key = path.substr(start, dot - start);
    walked = walked.empty() ? key : walked + "." + key;
    if (!node->is_object() || !node->contains(key)) {
      throw ConfigError("unknown config key '" + walked + "'; valid keys: " +
                        (node->is_object() ? key_list(*node) : "(none)"));
    }
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (node->is_object()) {
    throw ConfigError("config key '" + path + "' is a section, not a value");
  }

  // Parse the value like JSON when that matches the slot's type; anything
  // else (or a string slot) takes the raw text.
  nlohmann::json parsed = nlohmann::json::parse(raw, nullptr, false);
  if (node->is_string()) {
    *node = raw;
  } else if (!parsed.is_discarded() && !parsed.is_object() &&
             !parsed.is_string()) {
    *node = parsed;
  } else {
    throw ConfigError("override '" + assignment + "' does not parse as " +
                      std::string(node->type_name()));
  }
}

TrainConfig load_train_config(const std::string& path,
                              const std::vector<std::string>& overrides) {
  nlohmann::json merged = TrainConfig{};
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json file = nlohmann::json::parse(in, nullptr, false);
    if (file.is_discarded()) {
      throw ConfigError("config file '" + path + "' is not valid JSON");
    }
    merge_config(merged, file);
  }
  for (const std::string& ov : overrides) apply_override(merged, ov);
  TrainConfig cfg = merged.get<TrainConfig>();
  cfg.validate();
  return cfg;
}

}  // namespace samdistill::train
