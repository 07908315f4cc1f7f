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

#include "samdistill/cli/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "samdistill/core/mask_io.hpp"
#include "samdistill/train/trainer.hpp"
#include "samdistill/verify/verify.hpp"

namespace samdistill::cli {

namespace {

namespace fs = std::filesystem;

// gen-data: defaults <- config file <- dotted overrides, like train.
data::DataGenConfig load_gen_config(const std::string& path,
                                    const std::vector<std::string>& overrides) {
  nlohmann::json merged = data::DataGenConfig{};
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json file = nlohmann::json::parse(in, nullptr, false);
    if (file.is_discarded()) {
      throw ConfigError("config file '" + path + "' is not valid JSON");
    }
    train::merge_config(merged, file);
  }
  for (const std::string& ov : overrides) train::apply_override(merged, ov);
  return merged.get<data::DataGenConfig>();
}

int do_gen_data(const std::string& config_path,
                const std::vector<std::string>& overrides,
                const std::string& out, bool have_seed, uint64_t seed) {
  data::DataGenConfig cfg = load_gen_config(config_path, overrides);
  if (!out.empty()) cfg.out_root = out;
  if (have_seed) cfg.seed = seed;
  if (cfg.out_root.empty()) {
    throw ConfigError("gen-data needs an output root (--out or out_root)");
  }
  data::generate_dataset(cfg);
  fs::path root(cfg.out_root);
  std::ofstream echo(root / "effective_config.json");
  echo << nlohmann::json(cfg).dump(2) << "\n";
  std::printf("wrote %lld train / %lld val pairs under %s\n",
              static_cast<long long>(cfg.count_train),
              static_cast<long long>(cfg.count_val), cfg.out_root.c_str());
  return kExitOk;
}

// segment: run the configured segmenter over every image of a manifest and
// store the mask sets keyed by sample id, ready for the "precomputed" kind.
int do_segment(const std::string& config_path,
               const std::vector<std::string>& overrides,
               const std::string& manifest, const std::string& out,
               const std::string& source) {
  train::TrainConfig cfg = train::load_train_config(config_path, overrides);
  if (cfg.segmenter.kind == "precomputed") {
    throw ConfigError(
        "segment writes masks; pick a generating segmenter kind, not "
        "'precomputed'");
  }
  if (source != "lq" && source != "hq") {
    throw ConfigError("--source must be 'lq' or 'hq', got '" + source + "'");
  }
  std::vector<data::PairedSample> samples = data::load_dataset(manifest);
  fs::create_directories(out);
  for (const data::PairedSample& s : samples) {
    const core::Tensor& img = source == "lq" ? s.lq : s.hq;
    core::MaskSet m = segmenter::canonicalize(
        segmenter::segment(img, cfg.segmenter, s.id), cfg.segmenter.n_max);
    core::write_mask_set((fs::path(out) / s.id).string(), m,
                         cfg.segmenter.kind + ":" + source);
  }
  std::ofstream echo(fs::path(out) / "effective_config.json");
  echo << nlohmann::json(cfg.segmenter).dump(2) << "\n";
  std::printf("wrote masks for %zu samples under %s\n", samples.size(),
              out.c_str());
  return kExitOk;
}

int do_train(const std::string& config_path,
             const std::vector<std::string>& overrides, const std::string& out,
             bool have_seed, uint64_t seed, const std::string& resume) {
  std::vector<std::string> all = overrides;
  if (!out.empty()) all.push_back("out_dir=" + out);
  if (have_seed) all.push_back("seed=" + std::to_string(seed));
  train::TrainConfig cfg = train::load_train_config(config_path, all);
  train::run_training(cfg, resume);
  std::printf("trained %lld steps; artifacts in %s\n",
              static_cast<long long>(cfg.steps),
              cfg.out_dir.empty() ? "(none)" : cfg.out_dir.c_str());
  return kExitOk;
}

int do_eval(const std::string& ckpt, const std::string& manifest,
            const std::string& which) {
  train::EvalReport rep = train::evaluate(ckpt, manifest, which);
  nlohmann::json j = {{"which", rep.which},
                      {"count", rep.count},
                      {"mean_psnr", rep.mean_psnr},
                      {"mean_ssim", rep.mean_ssim}};
  std::printf("%s\n", j.dump().c_str());
  return kExitOk;
}

int do_verify() {
  std::vector<verify::CheckResult> results = verify::run_offline_suite();
  bool all_passed = true;
  for (const verify::CheckResult& r : results) {
    std::printf("%s %-26s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                r.detail.c_str());
    if (!r.passed) all_passed = false;
  }
  std::printf("%s\n", all_passed ? "all checks passed" : "CHECKS FAILED");
  return all_passed ? kExitOk : kExitRuntime;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"semantic-prior distillation for image restoration"};
  app.require_subcommand(1);

  std::string config_path, out, manifest, ckpt, which = "student", resume,
              source = "hq";
  std::vector<std::string> overrides;
  uint64_t seed = 0;
  bool have_seed = false;

  auto add_common = [&](CLI::App* cmd, bool config_required) {
    CLI::Option* c =
        cmd->add_option("--config", config_path, "JSON config file");
    if (config_required) c->required();
    cmd->add_option("--override", overrides,
                    "dotted key=value override, repeatable");
    cmd->add_option("--seed", seed, "override the config seed")
        ->each([&](const std::string&) { have_seed = true; });
  };

  CLI::App* gen = app.add_subcommand("gen-data", "synthesize a paired dataset");
  add_common(gen, false);
  gen->add_option("--out", out, "dataset root directory");

  CLI::App* seg = app.add_subcommand(
      "segment", "precompute mask sets for every sample of a manifest");
  add_common(seg, false);
  seg->add_option("--manifest", manifest, "dataset manifest to segment")
      ->required();
  seg->add_option("--out", out, "directory for the mask files")->required();
  seg->add_option("--source", source, "which image to segment: lq or hq");

  CLI::App* tr = app.add_subcommand("train", "run the training loop");
  add_common(tr, true);
  tr->add_option("--out", out, "output directory (overrides out_dir)");
  tr->add_option("--resume", resume, "checkpoint to resume from");

  CLI::App* ev = app.add_subcommand("eval", "score a checkpoint on a split");
  ev->add_option("--ckpt", ckpt, "checkpoint file")->required();
  ev->add_option("--manifest", manifest, "dataset manifest to score")
      ->required();
  ev->add_option("--which", which, "student (restorer only) or teacher");

  app.add_subcommand("verify",
                     "run the offline oracle/gradient/invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      return do_gen_data(config_path, overrides, out, have_seed, seed);
    }
    if (seg->parsed()) {
      return do_segment(config_path, overrides, manifest, out, source);
    }
    if (tr->parsed()) {
      return do_train(config_path, overrides, out, have_seed, seed, resume);
    }
    if (ev->parsed()) return do_eval(ckpt, manifest, which);
    return do_verify();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return kExitRuntime;
  }
}

}  // namespace samdistill::cli
