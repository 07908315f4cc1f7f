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
#include "samdistill/data/degrade.hpp"

namespace samdistill::data {

// A dataset on disk is a directory per split:
//   <root>/<split>/lq/<id>.png     degraded input (16-bit PNG)
//   <root>/<split>/hq/<id>.png     clean target
//   <root>/<split>/manifest.json   entries + generation parameters
// Manifest paths are relative to the manifest's own directory.
struct ManifestEntry {
  std::string id;
  std::string lq_path;
  std::string hq_path;
};

struct DatasetManifest {
  int version = 1;
  std::string split;
  DegradationSpec spec;
  std::vector<ManifestEntry> entries;
};

struct PairedSample {
  std::string id;
  core::ImageTensor lq;
  core::ImageTensor hq;
};

struct DataGenConfig {
  std::string out_root;
  int64_t width = 64;
  int64_t height = 64;
  int64_t count_train = 200;
  int64_t count_val = 32;
  DegradationSpec degradation;
  uint64_t seed = 0;
};

// JSON round-trips for the specs (degradation parameters embed into both
// manifests and training configs).
void to_json(nlohmann::json& j, const RainSpec& s);
void from_json(const nlohmann::json& j, RainSpec& s);
void to_json(nlohmann::json& j, const BlurSpec& s);
void from_json(const nlohmann::json& j, BlurSpec& s);
void to_json(nlohmann::json& j, const NoiseSpec& s);
void from_json(const nlohmann::json& j, NoiseSpec& s);
void to_json(nlohmann::json& j, const DegradationSpec& s);
void from_json(const nlohmann::json& j, DegradationSpec& s);
void to_json(nlohmann::json& j, const DataGenConfig& c);
void from_json(const nlohmann::json& j, DataGenConfig& c);

// Synthesizes one split (textures -> degraded pairs -> PNGs + manifest) and
// returns the manifest. Per-sample randomness derives from (seed, split,
// id), so a sample's content does not depend on how many come before it.
DatasetManifest generate_split(const DataGenConfig& cfg,
                               const std::string& split, int64_t count);

// Convenience: "train" with count_train and "val" with count_val.
void generate_dataset(const DataGenConfig& cfg);

DatasetManifest read_manifest(const std::string& manifest_path);
void write_manifest(const std::string& manifest_path,
                    const DatasetManifest& manifest);

// Loads every entry of a manifest into memory. manifest_path supplies the
// base directory for the relative entry paths.
std::vector<PairedSample> load_dataset(const std::string& manifest_path);

}  // namespace samdistill::data
