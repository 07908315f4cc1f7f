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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "samdistill/core/instrument.hpp"
#include "samdistill/data/degrade.hpp"
#include "samdistill/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace samdistill;
using core::Rng;
using core::Tensor;
using core::TensorT;
using train::TrainConfig;

namespace {

// Small full-cascade configuration that still exercises every code path.
TrainConfig small_cfg() {
  TrainConfig cfg;
  cfg.seed = 77;
  cfg.precision = "float64";
  cfg.steps = 5;
  cfg.batch_size = 2;
  cfg.log_every = 1;
  cfg.eval_every = 0;
  cfg.student.channels = 6;
  cfg.student.n_blocks = 1;
  cfg.refiner.channels = 6;
  cfg.refiner.n_blocks = 1;
  cfg.refiner.mask_slots = 4;
  cfg.refiner.spf.hidden = 6;
  cfg.perceptual.width1 = 4;
  cfg.perceptual.width2 = 6;
  cfg.perceptual.width3 = 8;
  cfg.perceptual.out_channels = 12;
  cfg.segmenter.luminance_bins = 3;
  cfg.segmenter.n_max = 4;
  return cfg;
}

// In-memory noisy pairs; 16x16 so the perceptual extractor has room.
std::vector<data::PairedSample> tiny_set(int n, uint64_t seed) {
  std::vector<data::PairedSample> out;
  Rng rng(seed);
  data::NoiseSpec spec;
  spec.sigma = 0.05;
  for (int i = 0; i < n; ++i) {
    Tensor hq = data::make_texture(16, 16, rng);
    out.push_back(
        {"s" + std::to_string(i), data::add_gaussian_noise(hq, spec, rng), hq});
  }
  return out;
}

template <class S>
std::vector<TensorT<S>> snapshot(
    const std::vector<core::NamedParamT<S>>& params) {
  std::vector<TensorT<S>> out;
  for (const auto& [name, var] : params) out.push_back(var.value());
  return out;
}

template <class S>
bool bits_equal(const std::vector<TensorT<S>>& a,
                const std::vector<TensorT<S>>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].shape() != b[i].shape()) return false;
    for (int64_t k = 0; k < a[i].numel(); ++k) {
      if (a[i].data()[k] != b[i].data()[k]) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("adam matches a hand-computed reference update") {
  train::AdamConfig ac;
  ac.lr = 0.01;
  Tensor p0({3});
  p0.data()[0] = 0.5;
  p0.data()[1] = -1.0;
  p0.data()[2] = 2.0;
  core::VarT<double> p = core::VarT<double>::leaf(p0, true);
  core::VarT<double> q =
      core::VarT<double>::leaf(Tensor({2}, 3.0), true);
  train::Adam<double> opt(ac, {{"p", p}, {"q", q}});

  std::vector<double> ref = {0.5, -1.0, 2.0};
  std::vector<double> m(3, 0.0), v(3, 0.0);
  for (int t = 1; t <= 2; ++t) {
    core::GradMapT<double> grads = core::backward(core::mean_all(
        core::mul(p, p)));
    opt.step(grads);
    double inv_c1 = 1.0 / (1.0 - std::pow(ac.beta1, t));
    double inv_c2 = 1.0 / (1.0 - std::pow(ac.beta2, t));
    for (int k = 0; k < 3; ++k) {
      double g = 2.0 * ref[k] / 3.0;
      m[k] = ac.beta1 * m[k] + (1.0 - ac.beta1) * g;
      v[k] = ac.beta2 * v[k] + (1.0 - ac.beta2) * g * g;
      ref[k] -= ac.lr * (m[k] * inv_c1) / (std::sqrt(v[k] * inv_c2) + ac.eps);
      CHECK(p.value().data()[k] == doctest::Approx(ref[k]).epsilon(1e-14));
    }
  }
  CHECK(opt.t() == 2);
  // q never received a gradient: value and moments are untouched.
  CHECK(q.value().data()[0] == 3.0);
  CHECK(q.value().data()[1] == 3.0);
  CHECK(opt.moments1()[1].data()[0] == 0.0);
  CHECK(opt.moments2()[1].data()[0] == 0.0);

  train::AdamConfig bad;
  bad.lr = 0.0;
  CHECK_THROWS_AS(train::Adam<double>(bad, {{"p", p}}), ConfigError);
}

TEST_CASE("train config round-trips through json") {
  TrainConfig cfg = small_cfg();
  cfg.train_manifest = "a/manifest.json";
  cfg.lambda1 = 0.25;
  nlohmann::json j = cfg;
  TrainConfig back = j.get<TrainConfig>();
  nlohmann::json j2 = back;
  CHECK(j == j2);
  CHECK(back.lambda1 == 0.25);
  CHECK(back.student.channels == 6);
  CHECK(back.segmenter.luminance_bins == 3);
}

TEST_CASE("dotted overrides replace exactly the named slot") {
  nlohmann::json j = TrainConfig{};
  train::apply_override(j, "adam.lr=0.001");
  CHECK(j["adam"]["lr"] == 0.001);
  train::apply_override(j, "precision=float64");
  CHECK(j["precision"] == "float64");
  train::apply_override(j, "segmenter.kind=grid");
  CHECK(j["segmenter"]["kind"] == "grid");
  train::apply_override(j, "student_only=true");
  CHECK(j["student_only"] == true);

  CHECK_THROWS_AS(train::apply_override(j, "adam.nope=1"), ConfigError);
  CHECK_THROWS_AS(train::apply_override(j, "adam=5"), ConfigError);
  CHECK_THROWS_AS(train::apply_override(j, "steps"), ConfigError);
  CHECK_THROWS_AS(train::apply_override(j, "steps=not_a_number"), ConfigError);
}

TEST_CASE("config files merge over defaults and reject unknown keys") {
  fs::path dir = fs::temp_directory_path() / "sd_train_cfg";
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "cfg.json");
    out << R"({"steps": 7, "student": {"channels": 8}})";
  }
  TrainConfig cfg = train::load_train_config(
      (dir / "cfg.json").string(), {"batch_size=2", "adam.lr=0.0005"});
  CHECK(cfg.steps == 7);
  CHECK(cfg.student.channels == 8);
  CHECK(cfg.batch_size == 2);
  CHECK(cfg.adam.lr == 0.0005);
  CHECK(cfg.lambda1 == 0.005);  // untouched default

  {
    std::ofstream out(dir / "bad.json");
    out << R"({"stepz": 7})";
  }
  CHECK_THROWS_AS(train::load_train_config((dir / "bad.json").string(), {}),
                  ConfigError);
  CHECK_THROWS_AS(train::load_train_config((dir / "absent.json").string(), {}),
                  ConfigError);
  CHECK_THROWS_AS(train::load_train_config("", {"precision=float16"}),
                  ConfigError);
}

TEST_CASE("log records serialize val metrics only on eval steps") {
  train::TrainLogRecord r;
  r.step = 3;
  r.l_recon1 = 0.5;
  nlohmann::json j = r;
  CHECK(j["step"] == 3);
  CHECK(!j.contains("val_psnr1"));
  r.has_val = true;
  r.val_psnr1 = 21.0;
  nlohmann::json j2 = r;
  CHECK(j2["val_psnr1"] == 21.0);
}

TEST_CASE("two identically seeded trainers agree bit for bit") {
  TrainConfig cfg = small_cfg();
  auto train_set = tiny_set(4, 5);
  train::Trainer<double> a(cfg, train_set, {});
  train::Trainer<double> b(cfg, train_set, {});
  for (int i = 0; i < 5; ++i) {
    train::TrainLogRecord ra = a.step();
    train::TrainLogRecord rb = b.step();
    CHECK(ra.total == rb.total);
  }
  CHECK(bits_equal(snapshot(a.student().params()),
                   snapshot(b.student().params())));
  REQUIRE(a.refiner() != nullptr);
  CHECK(bits_equal(snapshot(a.refiner()->params()),
                   snapshot(b.refiner()->params())));
}

TEST_CASE("training reduces the reconstruction loss") {
  TrainConfig cfg = small_cfg();
  cfg.student_only = true;
  cfg.adam.lr = 1e-3;
  auto train_set = tiny_set(4, 5);
  train::Trainer<double> t(cfg, train_set, {});
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 40; ++i) {
    double l = t.step().l_recon1;
    if (i < 5) first += l;
    if (i >= 35) last += l;
  }
  CHECK(last < first);
}

TEST_CASE("lambda zero reproduces the standalone student bitwise") {
  TrainConfig cfg = small_cfg();
  cfg.student_only = true;
  auto train_set = tiny_set(4, 5);
  train::Trainer<double> alone(cfg, train_set, {});

  TrainConfig cascade = small_cfg();
  cascade.student_only = false;
  cascade.lambda1 = 0.0;
  cascade.lambda2 = 0.0;
  train::Trainer<double> joint(cascade, train_set, {});

  CHECK(bits_equal(snapshot(alone.student().params()),
                   snapshot(joint.student().params())));
  for (int i = 0; i < 5; ++i) {
    alone.step();
    joint.step();
  }
  CHECK(bits_equal(snapshot(alone.student().params()),
                   snapshot(joint.student().params())));
}

TEST_CASE("checkpoint restore resumes the exact trajectory") {
  fs::path dir = fs::temp_directory_path() / "sd_train_ckpt";
  fs::create_directories(dir);
  std::string ckpt = (dir / "mid.bin").string();

  TrainConfig cfg = small_cfg();
  auto train_set = tiny_set(5, 9);
  train::Trainer<double> a(cfg, train_set, {});
  for (int i = 0; i < 6; ++i) a.step();
  a.save_checkpoint(ckpt);

  train::Trainer<double> b(cfg, train_set, {});
  b.restore(ckpt);
  CHECK(b.current_step() == 6);
  CHECK(bits_equal(snapshot(a.student().params()),
                   snapshot(b.student().params())));

  for (int i = 0; i < 4; ++i) {
    train::TrainLogRecord ra = a.step();
    train::TrainLogRecord rb = b.step();
    CHECK(ra.step == rb.step);
    CHECK(ra.total == rb.total);
  }
  CHECK(bits_equal(snapshot(a.student().params()),
                   snapshot(b.student().params())));
  CHECK(bits_equal(snapshot(a.refiner()->params()),
                   snapshot(b.refiner()->params())));

  // A student-only trainer cannot adopt a cascade checkpoint group layout.
  TrainConfig solo = cfg;
  solo.student_only = true;
  train::Trainer<double> c(solo, train_set, {});
  CHECK_NOTHROW(c.restore(ckpt));  // extra refiner group is simply unused
  CHECK_THROWS_AS(c.restore((dir / "missing.bin").string()), IoError);
}

TEST_CASE("evaluate scores checkpoints straight from disk") {
  fs::path dir = fs::temp_directory_path() / "sd_train_eval";
  fs::remove_all(dir);

  data::DataGenConfig gen;
  gen.out_root = dir.string();
  gen.count_train = 2;
  gen.count_val = 2;
  gen.height = 16;
  gen.width = 16;
  gen.seed = 11;
  gen.degradation.kind = "noise";
  data::generate_dataset(gen);
  std::string val_manifest = (dir / "val" / "manifest.json").string();

  TrainConfig cfg = small_cfg();
  cfg.student_only = true;
  cfg.train_manifest = (dir / "train" / "manifest.json").string();
  cfg.val_manifest = val_manifest;
  auto train_set = data::load_dataset(cfg.train_manifest);
  auto val_set = data::load_dataset(val_manifest);

  train::Trainer<double> t(cfg, train_set, val_set);
  std::string ckpt = (dir / "init.bin").string();
  t.save_checkpoint(ckpt);

  // The freshly initialized restorer is the identity, so scoring it equals
  // scoring the degraded inputs directly.
  double want_psnr = 0.0, want_ssim = 0.0;
  for (const auto& s : val_set) {
    want_psnr += core::psnr(s.lq, s.hq);
    want_ssim += core::ssim(s.lq, s.hq);
  }
  want_psnr /= 2.0;
  want_ssim /= 2.0;

  core::counters().reset();
  train::EvalReport rep = train::evaluate(ckpt, val_manifest, "student");
  CHECK(rep.which == "student");
  CHECK(rep.count == 2);
  CHECK(rep.mean_psnr == doctest::Approx(want_psnr).epsilon(1e-13));
  CHECK(rep.mean_ssim == doctest::Approx(want_ssim).epsilon(1e-13));
  // Student scoring never touches the segmenter, refiner, or extractor.
  CHECK(core::counters().baseline_forwards == 2);
  CHECK(core::counters().segmenter_calls == 0);
  CHECK(core::counters().refiner_forwards == 0);
  CHECK(core::counters().perceptual_forwards == 0);

  CHECK_THROWS_AS(train::evaluate(ckpt, val_manifest, "teacher"), ConfigError);
  CHECK_THROWS_AS(train::evaluate(ckpt, val_manifest, "both"), ConfigError);
  CHECK_THROWS_AS(train::evaluate((dir / "nope.bin").string(), val_manifest,
                                  "student"),
                  IoError);

  // Cascade checkpoints score through the full restore-segment-refine path.
  TrainConfig full = small_cfg();
  full.train_manifest = cfg.train_manifest;
  train::Trainer<double> ft(full, train_set, val_set);
  ft.step();
  std::string fckpt = (dir / "cascade.bin").string();
  ft.save_checkpoint(fckpt);
  core::counters().reset();
  train::EvalReport trep = train::evaluate(fckpt, val_manifest, "teacher");
  CHECK(trep.count == 2);
  CHECK(std::isfinite(trep.mean_psnr));
  CHECK(core::counters().segmenter_calls == 2);
  CHECK(core::counters().refiner_forwards == 2);
}

TEST_CASE("run_training writes logs and checkpoints, and resume matches") {
  fs::path dir = fs::temp_directory_path() / "sd_train_run";
  fs::remove_all(dir);

  data::DataGenConfig gen;
  gen.out_root = (dir / "data").string();
  gen.count_train = 3;
  gen.count_val = 2;
  gen.height = 16;
  gen.width = 16;
  gen.seed = 21;
  gen.degradation.kind = "noise";
  data::generate_dataset(gen);

  TrainConfig cfg = small_cfg();
  cfg.steps = 4;
  cfg.eval_every = 2;
  cfg.checkpoint_every = 2;
  cfg.train_manifest = (dir / "data" / "train" / "manifest.json").string();
  cfg.val_manifest = (dir / "data" / "val" / "manifest.json").string();
  cfg.out_dir = (dir / "run_full").string();
  train::run_training(cfg);

  CHECK(fs::exists(dir / "run_full" / "effective_config.json"));
  CHECK(fs::exists(dir / "run_full" / "ckpt_2.bin"));
  CHECK(fs::exists(dir / "run_full" / "ckpt_final.bin"));
  std::ifstream log((dir / "run_full" / "train_log.jsonl").string());
  REQUIRE(log.is_open());
  std::string line;
  int rows = 0, val_rows = 0;
  while (std::getline(log, line)) {
    nlohmann::json j = nlohmann::json::parse(line);
    CHECK(j.contains("step"));
    if (j.contains("val_psnr1")) val_rows++;
    rows++;
  }
  CHECK(rows == 4);
  CHECK(val_rows == 2);

  // Stopping at step 2 and resuming lands on the same final parameters.
  TrainConfig half = cfg;
  half.steps = 2;
  half.checkpoint_every = 0;
  half.out_dir = (dir / "run_half").string();
  train::run_training(half);
  TrainConfig rest = cfg;
  rest.checkpoint_every = 0;
  rest.out_dir = (dir / "run_rest").string();
  train::run_training(rest, (dir / "run_half" / "ckpt_final.bin").string());

  core::BlobFile full_ck = core::read_blob_file(
      (dir / "run_full" / "ckpt_final.bin").string(), train::kCheckpointMagic);
  core::BlobFile rest_ck = core::read_blob_file(
      (dir / "run_rest" / "ckpt_final.bin").string(), train::kCheckpointMagic);
  REQUIRE(full_ck.blobs.size() == rest_ck.blobs.size());
  for (size_t i = 0; i < full_ck.blobs.size(); ++i) {
    const Tensor& x = full_ck.blobs[i];
    const Tensor& y = rest_ck.blobs[i];
    REQUIRE(x.shape() == y.shape());
    for (int64_t k = 0; k < x.numel(); ++k) {
      if (x.data()[k] != y.data()[k]) {
        FAIL("blob ", i, " differs at ", k);
      }
    }
  }
}
