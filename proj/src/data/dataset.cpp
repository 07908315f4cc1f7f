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

#include "samdistill/data/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "samdistill/core/png_io.hpp"

namespace samdistill::data {

namespace fs = std::filesystem;
using nlohmann::json;

void to_json(json& j, const RainSpec& s) {
  j = json{{"streak_count", s.streak_count},
           {"length", s.length},
           {"width", s.width},
           {"angle_deg", s.angle_deg},
           {"angle_jitter_deg", s.angle_jitter_deg},
           {"intensity", s.intensity},
           {"intensity_jitter", s.intensity_jitter}};
}

void from_json(const json& j, RainSpec& s) {
  s.streak_count = j.value("streak_count", s.streak_count);
  s.length = j.value("length", s.length);
  s.width = j.value("width", s.width);
  s.angle_deg = j.value("angle_deg", s.angle_deg);
  s.angle_jitter_deg = j.value("angle_jitter_deg", s.angle_jitter_deg);
  s.intensity = j.value("intensity", s.intensity);
  s.intensity_jitter = j.value("intensity_jitter", s.intensity_jitter);
}

void to_json(json& j, const BlurSpec& s) {
  j = json{{"sigma", s.sigma}, {"kernel", s.kernel}};
}

void from_json(const json& j, BlurSpec& s) {
  s.sigma = j.value("sigma", s.sigma);
  s.kernel = j.value("kernel", s.kernel);
}

void to_json(json& j, const NoiseSpec& s) { j = json{{"sigma", s.sigma}}; }

void from_json(const json& j, NoiseSpec& s) {
  s.sigma = j.value("sigma", s.sigma);
}

void to_json(json& j, const DegradationSpec& s) {
  j = json{{"kind", s.kind},
           {"rain", s.rain},
           {"blur", s.blur},
           {"noise", s.noise}};
}

void from_json(const json& j, DegradationSpec& s) {
  s.kind = j.value("kind", s.kind);
  if (j.contains("rain")) j.at("rain").get_to(s.rain);
  if (j.contains("blur")) j.at("blur").get_to(s.blur);
  if (j.contains("noise")) j.at("noise").get_to(s.noise);
}

void to_json(json& j, const DataGenConfig& c) {
  j = json{{"out_root", c.out_root},   {"width", c.width},
           {"height", c.height},       {"count_train", c.count_train},
           {"count_val", c.count_val}, {"degradation", c.degradation},
           {"seed", c.seed}};
}

void from_json(const json& j, DataGenConfig& c) {
  c.out_root = j.value("out_root", c.out_root);
  c.width = j.value("width", c.width);
  c.height = j.value("height", c.height);
  c.count_train = j.value("count_train", c.count_train);
  c.count_val = j.value("count_val", c.count_val);
  if (j.contains("degradation")) j.at("degradation").get_to(c.degradation);
  c.seed = j.value("seed", c.seed);
}

DatasetManifest generate_split(const DataGenConfig& cfg,
                               const std::string& split, int64_t count) {
  if (cfg.out_root.empty()) throw ConfigError("data generation needs out_root");
  if (count < 1) throw ConfigError("split sample count must be >= 1");
  fs::path base = fs::path(cfg.out_root) / split;
  fs::create_directories(base / "lq");
  fs::create_directories(base / "hq");

  DatasetManifest manifest;
  manifest.split = split;
  manifest.spec = cfg.degradation;

  char idbuf[64];
  for (int64_t i = 0; i < count; ++i) {
    std::snprintf(idbuf, sizeof(idbuf), "%s_%06lld", split.c_str(),
                  static_cast<long long>(i));
    std::string id = idbuf;
    core::Rng tex_rng(core::Rng::derive(cfg.seed, "texture:" + id));
    core::Rng deg_rng(core::Rng::derive(cfg.seed, "degrade:" + id));
    core::ImageTensor hq = make_texture(cfg.height, cfg.width, tex_rng);
    core::ImageTensor lq = degrade(hq, cfg.degradation, deg_rng);

    std::string lq_rel = "lq/" + id + ".png";
    std::string hq_rel = "hq/" + id + ".png";
    core::write_png16((base / lq_rel).string(), lq);
    core::write_png16((base / hq_rel).string(), hq);
    manifest.entries.push_back({id, lq_rel, hq_rel});
  }

  write_manifest((base / "manifest.json").string(), manifest);
  return manifest;
}

void generate_dataset(const DataGenConfig& cfg) {
  generate_split(cfg, "train", cfg.count_train);
  generate_split(cfg, "val", cfg.count_val);
}

DatasetManifest read_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot read manifest: " + manifest_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed manifest " + manifest_path + ": " + e.what());
  }
  DatasetManifest m;
  m.version = j.value("version", 1);
  if (m.version != 1) {
    throw IoError("unsupported manifest version " + std::to_string(m.version));
  }
  m.split = j.value("split", "");
  if (j.contains("spec")) j.at("spec").get_to(m.spec);
  for (const auto& e : j.value("entries", json::array())) {
    m.entries.push_back({e.at("id").get<std::string>(),
                         e.at("lq").get<std::string>(),
                         e.at("hq").get<std::string>()});
  }
  return m;
}

void write_manifest(const std::string& manifest_path,
                    const DatasetManifest& manifest) {
  json j;
  j["version"] = manifest.version;
  j["split"] = manifest.split;
  j["spec"] = manifest.spec;
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    entries.push_back(json{{"id", e.id}, {"lq", e.lq_path}, {"hq", e.hq_path}});
  }
  j["entries"] = entries;
  std::ofstream out(manifest_path);
  if (!out) throw IoError("cannot write manifest: " + manifest_path);
  out << j.dump(2) << "\n";
}

std::vector<PairedSample> load_dataset(const std::string& manifest_path) {
  DatasetManifest manifest = read_manifest(manifest_path);
  fs::path base = fs::path(manifest_path).parent_path();
  std::vector<PairedSample> samples;
  samples.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    PairedSample s;
    s.id = e.id;
    s.lq = core::read_png((base / e.lq_path).string());
    s.hq = core::read_png((base / e.hq_path).string());
    if (!s.lq.same_shape(s.hq)) {
      throw ShapeError("pair " + e.id + " has mismatched lq/hq shapes");
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace samdistill::data
