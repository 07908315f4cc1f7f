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

#include "samdistill/train/trainer.hpp"

#include <string>
#include <vector>

namespace samdistill::train {

void to_json(nlohmann::json& j, const TrainLogRecord& r) {
  j = {{"step", r.step},         {"l_recon1", r.l_recon1},
       {"l_recon2", r.l_recon2}, {"l_spd", r.l_spd},
       {"l_sgr", r.l_sgr},       {"total", r.total},
       {"sgr_skips", r.sgr_skips}};
  if (r.has_val) {
    j["val_psnr1"] = r.val_psnr1;
    j["val_psnr2"] = r.val_psnr2;
  }
}

namespace {

// Copies one parameter group's value blobs into live parameter handles.
// Optimizer moments follow the values in the blob stream; scoring does not
// need them, so they are skipped by advancing the cursor.
template <class S>
void load_eval_params(const core::BlobFile& f, const nlohmann::json& meta,
                      size_t* blob,
                      const std::vector<core::NamedParamT<S>>& bound,
                      bool skip_moments) {
  const auto names = meta.at("params").get<std::vector<std::string>>();
  if (names.size() != bound.size()) {
    throw IoError("checkpoint parameter group size mismatch");
  }
  for (size_t i = 0; i < bound.size(); ++i) {
    if (names[i] != bound[i].first) {
      throw IoError("checkpoint parameter '" + names[i] +
                    "' does not match model parameter '" + bound[i].first +
                    "'");
    }
    if (*blob >= f.blobs.size()) throw IoError("checkpoint is truncated");
    const core::Tensor& t = f.blobs[(*blob)++];
    if (t.shape() != bound[i].second.value().shape()) {
      throw IoError("checkpoint tensor shape mismatch for '" + names[i] + "'");
    }
    core::VarT<S> var = bound[i].second;
    var.mutable_value() = t.cast<S>();
  }
  if (skip_moments) *blob += 2 * bound.size();
}

template <class S>
EvalReport evaluate_impl(const core::BlobFile& f, const TrainConfig& cfg,
                         const std::vector<data::PairedSample>& samples,
                         const std::string& which) {
  core::NoGradGuard ng;
  models::BaselineModel<S> student(cfg.student,
                                   core::Rng::derive(cfg.seed, "ir1"));
  size_t blob = 0;
  load_eval_params<S>(f, f.header.at("student"), &blob, student.params(),
                      /*skip_moments=*/true);

  std::optional<models::Refiner<S>> refiner;
  if (which == "teacher") {
    if (!f.header.contains("refiner")) {
      throw ConfigError("checkpoint has no refiner group; cannot evaluate "
                        "which=teacher");
    }
    refiner.emplace(cfg.refiner, core::Rng::derive(cfg.seed, "refiner"));
    load_eval_params<S>(f, f.header.at("refiner"), &blob, refiner->params(),
                        /*skip_moments=*/true);
  }

  EvalReport rep;
  rep.which = which;
  double psnr_acc = 0.0, ssim_acc = 0.0;
  for (const data::PairedSample& s : samples) {
    core::VarT<S> y =
        student.forward(core::VarT<S>::constant(s.lq.cast<S>()));
    if (refiner) {
      core::MaskSet m = segmenter::canonicalize(
          segmenter::segment(core::clamp01(y.value().template cast<double>()),
                             cfg.segmenter, s.id),
          cfg.segmenter.n_max);
      core::VarT<S> packed = core::VarT<S>::constant(models::pack_masks<S>(
          m, cfg.refiner.mask_slots, s.lq.dim(1), s.lq.dim(2)));
      y = refiner->forward(y, packed);
    }
    core::Tensor out = core::clamp01(y.value().template cast<double>());
    psnr_acc += core::psnr(out, s.hq);
    ssim_acc += core::ssim(out, s.hq);
    rep.count++;
  }
  rep.mean_psnr = psnr_acc / static_cast<double>(rep.count);
  rep.mean_ssim = ssim_acc / static_cast<double>(rep.count);
  return rep;
}

}  // namespace

EvalReport evaluate(const std::string& checkpoint_path,
                    const std::string& manifest_path,
                    const std::string& which) {
  if (which != "student" && which != "teacher") {
    throw ConfigError("which must be 'student' or 'teacher', got '" + which +
                      "'");
  }
  core::BlobFile f = core::read_blob_file(checkpoint_path, kCheckpointMagic);
  if (f.header.value("format", "") != "checkpoint") {
    throw IoError("'" + checkpoint_path + "' is not a checkpoint file");
  }
  TrainConfig cfg = f.header.at("config").get<TrainConfig>();
  std::vector<data::PairedSample> samples = data::load_dataset(manifest_path);
  if (samples.empty()) throw ConfigError("evaluation split is empty");
  if (cfg.precision == "float64") {
    return evaluate_impl<double>(f, cfg, samples, which);
  }
  return evaluate_impl<float>(f, cfg, samples, which);
}

void run_training(const TrainConfig& cfg, const std::string& resume_path) {
  std::vector<data::PairedSample> train = data::load_dataset(cfg.train_manifest);
  std::vector<data::PairedSample> val;
  if (!cfg.val_manifest.empty()) val = data::load_dataset(cfg.val_manifest);
  if (cfg.precision == "float64") {
    Trainer<double> t(cfg, train, val);
    if (!resume_path.empty()) t.restore(resume_path);
    t.run();
  } else {
    Trainer<float> t(cfg, train, val);
    if (!resume_path.empty()) t.restore(resume_path);
    t.run();
  }
}

}  // namespace samdistill::train
